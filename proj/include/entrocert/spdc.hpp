#pragma once

// Biphoton source and detector-chain model: a Gaussian joint spectrum in
// sum/difference coordinates, timing spreads, and closed-form entropies
// used for feasibility budgets. SI units unless a name says otherwise.

#include <cstddef>
#include <string>
#include <vector>

#include "entrocert/probcore.hpp"

namespace entrocert {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

struct SpdcParams {
  double pump_center_rad_per_s = 0.0;  ///< 0 puts the grid in the detuning frame
  double pump_sigma_rad_per_s = 0.0;   ///< sigma of wA + wB
  double phasematch_sigma_rad_per_s = 0.0;  ///< sigma of wA - wB
  double crystal_length_mm = 20.0;
  double gvd_fs2_per_mm = 292.0;
  double jitter_a_s = 20e-12;  ///< Gaussian RMS
  double jitter_b_s = 20e-12;
  double timebin_s = 1e-12;

  /// Throws ConfigError on non-positive widths; returns advisory warnings.
  std::vector<std::string> validate() const;
};

struct GridSpec2D {
  double start_a = 0.0;
  double step_a = 1.0;
  std::size_t count_a = 0;
  double start_b = 0.0;
  double step_b = 1.0;
  std::size_t count_b = 0;
};

/// Joint density of (wA, wB) with wA + wB - pump ~ N(0, sigma_+^2) and
/// wA - wB ~ N(0, sigma_-^2), each frequency measured about pump/2.
Grid2D joint_spectral_density(const SpdcParams& p, const GridSpec2D& grid);

/// Moments of the joint spectrum.
double spdc_marginal_sigma(const SpdcParams& p);     ///< sigma of wA (and wB)
double spdc_conditional_sigma(const SpdcParams& p);  ///< sigma of wA given wB
/// Closed-form h(wA | wB) in bits per rad/s.
double spdc_conditional_entropy(const SpdcParams& p);

struct TimingModel {
  double sigma_intrinsic = 0.0;
  double sigma_observed = 0.0;
  double fwhm_observed = 0.0;
};

double fwhm_from_sigma(double sigma);
double sigma_from_fwhm(double fwhm);

/// sqrt(0.9 * length * gvd), in seconds.
double intrinsic_timing_sigma(double crystal_length_mm, double gvd_fs2_per_mm);

/// Independent Gaussian jitters added in quadrature.
TimingModel observed_timing_sigma(double intrinsic_s, double jitter_a_s, double jitter_b_s);

/// 1/2 log2(2 pi e sigma^2).
double gaussian_max_entropy(double sigma);
/// 1/2 log2(pi e fwhm^2 / (4 ln 2)).
double gaussian_max_entropy_fwhm(double fwhm);
/// Inverse of gaussian_max_entropy.
double gaussian_sigma_for_entropy(double bits);

/// log2(2 pi fwhm).
double lorentzian_entropy(double fwhm);
double lorentzian_fwhm_for_entropy(double bits);

/// Wavelength/frequency conversions (dw = 2 pi c dl / l^2).
double delta_omega_from_delta_lambda(double delta_lambda_m, double wavelength_m);
double delta_lambda_from_delta_omega(double delta_omega, double wavelength_m);
double frequency_from_wavelength(double wavelength_m);  ///< Hz

/// Gaussian timing-difference density sampled at `step` over
/// +/- half_width_sigmas, centered on zero.
Grid1D timing_difference_density(double sigma_s, double step_s, double half_width_sigmas = 8.0);

}  // namespace entrocert
