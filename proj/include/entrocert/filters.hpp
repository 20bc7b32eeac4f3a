#pragma once

// Normalized filter transmission profiles, the top-hat majorization test,
// and convex-decomposition weights for banks of drifting filters.
//
// Frequencies are angular (rad/s) throughout; densities are per rad/s.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "entrocert/probcore.hpp"

namespace entrocert {

class FilterProfile;

struct TopHat {
  double width = 1.0;
};

struct Lorentzian {
  double fwhm = 1.0;
};

struct Gaussian {
  double sigma = 1.0;
};

namespace detail {
struct VoigtTable;
}

struct Voigt {
  double fwhm_lorentz = 1.0;
  double sigma_gauss = 1.0;
  std::shared_ptr<detail::VoigtTable> table;  // built on first dense use
};

/// Measured profile. The table abscissa is the offset from the profile
/// center; it carries a zero node at each end so that linear interpolation
/// integrates to exactly step * sum(values).
struct Tabulated {
  Grid1D table;
  std::vector<double> cumulative;  // trapezoid CDF at the nodes
};

/// Pointwise arithmetic mean of component profiles (each keeps its own center).
struct Mixture {
  std::shared_ptr<const std::vector<FilterProfile>> components;
};

enum class ProfileKind { TopHat, Lorentzian, Gaussian, Voigt, Tabulated, Mixture };

enum class Side { Left, Right };

/// Leading asymptotic behaviour of a profile on one side.
struct TailModel {
  enum class Kind { Compact, Gaussian, Power };
  Kind kind = Kind::Compact;
  // Gaussian: amplitude * exp(-(x - center)^2 / (2 sigma^2))
  double sigma = 0.0;
  double center = 0.0;
  double amplitude = 0.0;
  // Power: coefficient / x^2
  double coefficient = 0.0;
};

class FilterProfile {
 public:
  using Shape = std::variant<TopHat, Lorentzian, Gaussian, Voigt, Tabulated, Mixture>;

  static FilterProfile top_hat(double width, double center = 0.0);
  static FilterProfile lorentzian(double fwhm, double center = 0.0);
  static FilterProfile gaussian(double sigma, double center = 0.0);
  static FilterProfile voigt(double fwhm_lorentz, double sigma_gauss, double center = 0.0);
  /// Builds a measured profile from uniformly spaced samples at absolute
  /// frequencies `omega`. Samples below noise_floor_fraction * peak
  /// (including negative noise excursions) are clipped to zero before
  /// normalization.
  static FilterProfile tabulated(std::span<const double> omega, std::span<const double> transmission,
                                 double center, double noise_floor_fraction = 1e-6);
  /// Equal-weight mixture; a single component is returned unchanged.
  static FilterProfile mean_of(std::vector<FilterProfile> components);

  ProfileKind kind() const noexcept { return static_cast<ProfileKind>(shape_.index()); }
  const Shape& shape() const noexcept { return shape_; }
  double center() const noexcept { return center_; }
  FilterProfile with_center(double center) const;

  double evaluate(double omega) const;
  /// log(evaluate(omega)) computed without underflow where possible; -inf
  /// outside the support.
  double log_evaluate(double omega) const;
  double cdf(double omega) const;
  /// Integral of the profile over [lo, hi].
  double mass(double lo, double hi) const;
  double peak() const;
  /// Characteristic full width at half maximum.
  double width() const;
  TailModel tail(Side side) const;

  /// Same kind and parameters, ignoring the center.
  bool same_shape(const FilterProfile& other) const;
  std::string describe() const;

 private:
  FilterProfile(Shape shape, double center) : shape_(std::move(shape)), center_(center) {}

  Shape shape_;
  double center_ = 0.0;
};

double evaluate(const FilterProfile& f, double omega);

struct TopHatCheck {
  bool verdict = false;
  /// 1/spacing - peak, per rad/s. Non-negative iff the profile is majorized.
  double margin = 0.0;
};

/// Whether f is majorized by a normalized top-hat of width `spacing`.
TopHatCheck majorized_by_tophat(const FilterProfile& f, double spacing);

/// Smallest width parameter at which a profile of the given kind is
/// majorized by a top-hat of width `spacing`: the FWHM for Lorentzian,
/// sigma for Gaussian, and for Voigt the Lorentzian FWHM at fixed
/// `voigt_sigma` (zero when the Gaussian part alone suffices).
double min_width_for_spacing(ProfileKind kind, double spacing, double voigt_sigma = 0.0);

class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(std::vector<FilterProfile> profiles, double nominal_spacing,
             std::vector<double> nominal_centers);

  /// Copies of `prototype` at first_center + n * spacing.
  static FilterBank regular(const FilterProfile& prototype, double first_center, double spacing,
                            std::size_t count);

  std::size_t size() const noexcept { return profiles_.size(); }
  const std::vector<FilterProfile>& profiles() const noexcept { return profiles_; }
  const FilterProfile& operator[](std::size_t n) const { return profiles_[n]; }
  double nominal_spacing() const noexcept { return spacing_; }
  const std::vector<double>& nominal_centers() const noexcept { return nominal_; }

  /// delta_n = center_n - nominal_n.
  std::vector<double> offsets() const;
  /// Profile n expressed relative to its nominal center.
  FilterProfile relative_profile(std::size_t n) const;
  /// Region tiled by the nominal placements: first - spacing/2 .. last + spacing/2.
  double span_lo() const;
  double span_hi() const;
  double narrowest_width() const;
  /// True when every profile has the same shape and sits on its nominal center.
  bool uniform() const;

 private:
  std::vector<FilterProfile> profiles_;
  double spacing_ = 0.0;
  std::vector<double> nominal_;
};

/// Arithmetic mean of the bank's profiles after moving each to a common
/// center (its nominal center is subtracted).
FilterProfile mean_filter(const FilterBank& bank);

struct WeightOptions {
  double window_widths = 50.0;        ///< half-window in target FWHM units
  std::size_t grid_points = 100000;   ///< dense grid on the window
  double floor = 1e-3;                ///< weights below this are degenerate
};

struct FilterWeight {
  double value = 1.0;
  double location = 0.0;       ///< where the minimum ratio was attained
  bool tail_limited = false;   ///< minimum came from the |omega| -> infinity limit
  double window_half_width = 0.0;
};

/// w = min over omega of f_n(omega) / target(omega), combining a dense
/// window search with the analytic tail limit. Throws DegenerateRatio below
/// the floor.
FilterWeight filter_weight_detail(const FilterProfile& f_n, const FilterProfile& target,
                                  const WeightOptions& options = {});
double filter_weight(const FilterProfile& f_n, const FilterProfile& target,
                     double search_window = 50.0);

struct WeightReport {
  std::vector<double> per_filter_w;
  std::vector<FilterWeight> details;
  double w0 = 1.0;
  std::size_t argmin_index = 0;
  FilterProfile target = FilterProfile::top_hat(1.0);
};

/// Per-filter weights against mean_filter(bank); w0 is their minimum.
WeightReport bank_weights(const FilterBank& bank, const WeightOptions& options = {});

/// Closed form for a Lorentzian widened by (1 + epsilon), epsilon >= 0.
double lorentzian_width_weight(double epsilon);
/// Closed form for an equal-width Lorentzian displaced by delta half-widths.
double lorentzian_shift_weight(double delta_hwhm);
/// First-order form of lorentzian_shift_weight.
double lorentzian_shift_weight_linear(double delta_hwhm);

}  // namespace entrocert
