#pragma once

// Entanglement-witness verdicts from time and frequency entropy bounds,
// frequency budgets, and small feasibility helpers.

#include <string>
#include <vector>

#include "entrocert/coarsegrain.hpp"

namespace entrocert {

enum class Inequality {
  SumDiff,      ///< h(tA - tB) + h(wA + wB) >= log2(2 pi e)
  Conditional,  ///< h(tA | tB) + h(wA | wB) >= log2(pi e)
};

std::string to_string(Inequality q);
/// Accepts "sum-diff" / "sum_diff" and "conditional".
Inequality inequality_from_string(const std::string& name);

double witness_threshold(Inequality q);

struct WitnessReport {
  double h_time_bound = 0.0;
  double h_freq_bound = 0.0;
  double threshold = 0.0;
  double margin = 0.0;  ///< threshold - (h_time_bound + h_freq_bound)
  Inequality inequality = Inequality::Conditional;
  bool certified = false;
  double w0_used = 1.0;
  bool preconditions_met = false;
  std::vector<std::string> reasons;  ///< why certification was withheld
  std::vector<std::string> notes;
  std::vector<std::string> inputs_digest;
};

/// Checks bound kinds against the inequality (throws KindMismatch), then
/// certifies iff both bounds are valid and their sum is strictly below the
/// threshold. The conditional form accepts a difference bound for time and
/// a sum bound for frequency, since each upper-bounds the conditional entropy.
WitnessReport evaluate_witness(const EntropyBound& h_time, const EntropyBound& h_freq, Inequality q);

struct FrequencyBudget {
  double max_h_freq_bits = 0.0;
  double max_sigma_rad_per_s = 0.0;
  double max_fwhm_gauss_m = 0.0;  ///< Gaussian FWHM cap as a wavelength span
  double max_fwhm_gauss_rad_per_s = 0.0;
  double max_fwhm_lorentz_rad_per_s = 0.0;
};

/// Largest frequency entropy that still certifies, under the conditional
/// threshold, given a timing bound; plus the equivalent Gaussian and
/// Lorentzian widths at `center_wavelength_m`.
FrequencyBudget frequency_budget(double h_time_bound_bits, double center_wavelength_m,
                                 Inequality q = Inequality::Conditional);

/// First-order resolvable linewidth of a grating: center / (grooves_per_mm * beam_mm).
double grating_resolution(double grooves_per_mm, double beam_diameter_mm, double center_freq_hz);
/// Beam width needed to resolve `target_linewidth_hz`.
double grating_beam_for_resolution(double grooves_per_mm, double target_linewidth_hz,
                                   double center_freq_hz);

struct EbitsBound {
  double formula_footnote = 0.0;  ///< -1 - log2(x)
  double formula_e_based = 0.0;   ///< -log2(e x)
  double reported_value = 2.546;
  std::string matches_reported;   ///< which formula reproduces the reported value
  std::string note;
};

/// Entanglement-of-formation lower bound from a measured uncertainty
/// product. Both candidate formulas are returned; each is clamped at zero.
EbitsBound ebits_lower_bound(double uncertainty_product);

}  // namespace entrocert
