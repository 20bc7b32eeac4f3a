#include "entrocert/spdc.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "entrocert/errors.hpp"
#include "entrocert/parallel.hpp"

namespace entrocert {

namespace {

constexpr double kPi = std::numbers::pi;
const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
}

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be non-negative");
}

}  // namespace

std::vector<std::string> SpdcParams::validate() const {
  require_positive(pump_sigma_rad_per_s, "pump_sigma_rad_per_s");
  require_positive(phasematch_sigma_rad_per_s, "phasematch_sigma_rad_per_s");
  require_positive(crystal_length_mm, "crystal_length_mm");
  require_positive(gvd_fs2_per_mm, "gvd_fs2_per_mm");
  require_non_negative(jitter_a_s, "jitter_a_s");
  require_non_negative(jitter_b_s, "jitter_b_s");
  require_positive(timebin_s, "timebin_s");
  if (!std::isfinite(pump_center_rad_per_s)) throw ConfigError("pump_center_rad_per_s must be finite");
  std::vector<std::string> warnings;
  if (!(pump_sigma_rad_per_s < phasematch_sigma_rad_per_s))
    warnings.emplace_back("pump sigma is not below the phase-matching sigma: frequencies are not anti-correlated");
  return warnings;
}

Grid2D joint_spectral_density(const SpdcParams& p, const GridSpec2D& grid) {
  p.validate();
  if (grid.count_a == 0 || grid.count_b == 0) throw ConfigError("empty spectral grid");
  require_positive(grid.step_a, "grid step A");
  require_positive(grid.step_b, "grid step B");
  const double feature = std::min(p.pump_sigma_rad_per_s, p.phasematch_sigma_rad_per_s);
  const double resolved = feature / std::max(grid.step_a, grid.step_b);
  if (resolved < 20.0) {
    std::ostringstream os;
    os << "spectral grid resolves min(sigma_+, sigma_-) with " << resolved
       << " points; at least 20 required";
    throw ResolutionError(os.str());
  }
  const double half = 0.5 * p.pump_center_rad_per_s;
  const double sp = p.pump_sigma_rad_per_s, sm = p.phasematch_sigma_rad_per_s;
  std::vector<double> v(grid.count_a * grid.count_b);
  parallel_for(grid.count_a, [&](std::size_t i) {
    const double wa = grid.start_a + static_cast<double>(i) * grid.step_a - half;
    for (std::size_t j = 0; j < grid.count_b; ++j) {
      const double wb = grid.start_b + static_cast<double>(j) * grid.step_b - half;
      const double s = (wa + wb) / sp;
      const double d = (wa - wb) / sm;
      v[i * grid.count_b + j] = std::exp(-0.5 * (s * s + d * d));
    }
  });
  return Grid2D::normalized(grid.start_a, grid.step_a, grid.count_a, grid.start_b, grid.step_b,
                            grid.count_b, std::move(v));
}

double spdc_marginal_sigma(const SpdcParams& p) {
  return 0.5 * std::hypot(p.pump_sigma_rad_per_s, p.phasematch_sigma_rad_per_s);
}

double spdc_conditional_sigma(const SpdcParams& p) {
  const double sp = p.pump_sigma_rad_per_s, sm = p.phasematch_sigma_rad_per_s;
  return sp * sm / std::hypot(sp, sm);
}

double spdc_conditional_entropy(const SpdcParams& p) {
  return gaussian_max_entropy(spdc_conditional_sigma(p));
}

double fwhm_from_sigma(double sigma) { return kFwhmPerSigma * sigma; }
double sigma_from_fwhm(double fwhm) { return fwhm / kFwhmPerSigma; }

double intrinsic_timing_sigma(double crystal_length_mm, double gvd_fs2_per_mm) {
  require_positive(crystal_length_mm, "crystal length");
  require_positive(gvd_fs2_per_mm, "group velocity dispersion");
  return std::sqrt(0.9 * crystal_length_mm * gvd_fs2_per_mm) * 1e-15;
}

TimingModel observed_timing_sigma(double intrinsic_s, double jitter_a_s, double jitter_b_s) {
  require_non_negative(intrinsic_s, "intrinsic timing sigma");
  require_non_negative(jitter_a_s, "jitter A");
  require_non_negative(jitter_b_s, "jitter B");
  TimingModel t;
  t.sigma_intrinsic = intrinsic_s;
  t.sigma_observed = std::sqrt(intrinsic_s * intrinsic_s + jitter_a_s * jitter_a_s + jitter_b_s * jitter_b_s);
  t.fwhm_observed = fwhm_from_sigma(t.sigma_observed);
  return t;
}

double gaussian_max_entropy(double sigma) {
  require_positive(sigma, "sigma");
  return 0.5 * std::log2(2.0 * kPi * std::numbers::e) + std::log2(sigma);
}

double gaussian_max_entropy_fwhm(double fwhm) {
  require_positive(fwhm, "FWHM");
  return 0.5 * std::log2(kPi * std::numbers::e / (4.0 * std::log(2.0))) + std::log2(fwhm);
}

double gaussian_sigma_for_entropy(double bits) {
  return std::exp2(bits - 0.5 * std::log2(2.0 * kPi * std::numbers::e));
}

double lorentzian_entropy(double fwhm) {
  require_positive(fwhm, "FWHM");
  return std::log2(2.0 * kPi * fwhm);
}

double lorentzian_fwhm_for_entropy(double bits) { return std::exp2(bits) / (2.0 * kPi); }

double delta_omega_from_delta_lambda(double delta_lambda_m, double wavelength_m) {
  require_positive(wavelength_m, "wavelength");
  return 2.0 * kPi * kSpeedOfLight * delta_lambda_m / (wavelength_m * wavelength_m);
}

double delta_lambda_from_delta_omega(double delta_omega, double wavelength_m) {
  require_positive(wavelength_m, "wavelength");
  return delta_omega * wavelength_m * wavelength_m / (2.0 * kPi * kSpeedOfLight);
}

double frequency_from_wavelength(double wavelength_m) {
  require_positive(wavelength_m, "wavelength");
  return kSpeedOfLight / wavelength_m;
}

Grid1D timing_difference_density(double sigma_s, double step_s, double half_width_sigmas) {
  require_positive(sigma_s, "timing sigma");
  require_positive(step_s, "timing step");
  const auto half = static_cast<std::size_t>(std::ceil(half_width_sigmas * sigma_s / step_s));
  std::vector<double> v(2 * half + 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(half)) * step_s / sigma_s;
    v[i] = std::exp(-0.5 * t * t);
  }
  return Grid1D::normalized(-static_cast<double>(half) * step_s, step_s, std::move(v));
}

}  // namespace entrocert
