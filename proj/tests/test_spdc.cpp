#include <doctest.h>

#include <cmath>
#include <random>

#include "entrocert/coarsegrain.hpp"
#include "entrocert/errors.hpp"
#include "entrocert/spdc.hpp"
#include "oracles.hpp"

using namespace entrocert;
using oracle::kPi;

namespace {

Grid2D square_grid(const SpdcParams& p, double half, std::size_t n) {
  const double step = 2.0 * half / static_cast<double>(n);
  return joint_spectral_density(p, GridSpec2D{-half + step / 2, step, n, -half + step / 2, step, n});
}

double variance(const CoarseGrained1D& cg) {
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < cg.probs.size(); ++k) {
    const double x = static_cast<double>(k) * cg.bin_width;
    mean += cg.probs[k] * x;
    m2 += cg.probs[k] * x * x;
  }
  return m2 - mean * mean;
}

}  // namespace

TEST_CASE("joint spectral density moments") {
  SpdcParams p;
  p.pump_sigma_rad_per_s = 0.2;
  p.phasematch_sigma_rad_per_s = 2.0;
  const Grid2D g = square_grid(p, 5.0, 1000);
  const auto cg = tophat_bin(g, 0.01, 0.01);
  // Sum index spacing equals the bin width, so the sum variable's variance
  // is sigma_plus^2 plus two bins' worth of uniform spread.
  const auto s = sum_variable_distribution(cg);
  const auto d = diff_variable_distribution(cg);
  CHECK(std::sqrt(variance(s)) == doctest::Approx(0.2).epsilon(0.01));
  // Diff variable is truncated by the square window; compare within its core.
  CHECK(std::sqrt(variance(d)) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(spdc_conditional_sigma(p) == doctest::Approx(0.2 * 2.0 / std::sqrt(4.04)));
  CHECK(spdc_marginal_sigma(p) == doctest::Approx(0.5 * std::sqrt(4.04)));
  CHECK(spdc_conditional_entropy(p) == doctest::Approx(oracle::gaussian_entropy(spdc_conditional_sigma(p))));
}

TEST_CASE("separable when the sigmas match") {
  SpdcParams p;
  p.pump_sigma_rad_per_s = 1.0;
  p.phasematch_sigma_rad_per_s = 1.0;
  CHECK_FALSE(p.validate().empty());
  const Grid2D g = square_grid(p, 5.0, 200);
  for (double d : {1.0, 0.5, 0.25}) CHECK(mutual_information(tophat_bin(g, d, d).probs) < 1e-9);
}

TEST_CASE("grid resolution is enforced") {
  SpdcParams p;
  p.pump_sigma_rad_per_s = 0.1;
  p.phasematch_sigma_rad_per_s = 2.0;
  CHECK_THROWS_AS(square_grid(p, 5.0, 100), ResolutionError);
  p.pump_sigma_rad_per_s = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("timing constants") {
  const double s = intrinsic_timing_sigma(20.0, 292.0);
  CHECK(s * 1e15 == doctest::Approx(72.5).epsilon(0.1 / 72.5));
  CHECK(fwhm_from_sigma(s) * 1e15 == doctest::Approx(171.0).epsilon(1.0 / 171.0));
  CHECK(intrinsic_timing_sigma(80.0, 292.0) == doctest::Approx(2.0 * s));
  const auto none = observed_timing_sigma(0.0, 20e-12, 20e-12);
  CHECK(none.sigma_observed == doctest::Approx(std::sqrt(2.0) * 20e-12).epsilon(1e-15));
  const auto both = observed_timing_sigma(s, 20e-12, 20e-12);
  CHECK(both.sigma_observed * 1e12 == doctest::Approx(28.28).epsilon(0.01 / 28.28));
  CHECK(both.sigma_observed >= both.sigma_intrinsic);
  CHECK(observed_timing_sigma(s, 0.0, 0.0).sigma_observed == doctest::Approx(s));
  CHECK(both.fwhm_observed == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(2.0)) * both.sigma_observed));
}

TEST_CASE("max-entropy helpers") {
  CHECK(gaussian_max_entropy(1.0) == doctest::Approx(2.0471).epsilon(1e-4));
  CHECK(gaussian_max_entropy_fwhm(424e-12) == doctest::Approx(-30.3237).epsilon(1e-5));
  CHECK(gaussian_sigma_for_entropy(gaussian_max_entropy(3.3)) == doctest::Approx(3.3));
  const double l = lorentzian_entropy(2.0 * kPi * 0.29e9);
  CHECK(l == doctest::Approx(33.42).epsilon(0.01 / 33.42));
  CHECK(lorentzian_entropy(2.0) - lorentzian_entropy(1.0) == doctest::Approx(1.0));
  CHECK(lorentzian_entropy(1.0 / (2.0 * kPi)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lorentzian_fwhm_for_entropy(l) == doctest::Approx(2.0 * kPi * 0.29e9));
  // Lorentzian entropy against direct quadrature of -f log2 f.
  const double a = 1.0;
  double h = 0.0;
  for (int k = -2000; k < 2000; ++k)
    h += oracle::integrate([&](double x) { const double f = oracle::lorentzian(x, a); return -f * std::log2(f); },
                           k * 0.5, (k + 1) * 0.5, 1e-14);
  // Tails beyond |x| = X, with f ~ c / x^2.
  const double c = 0.5 * a / kPi, X = 1000.0;
  h += 2.0 * c * (2.0 * (std::log2(X) + 1.0 / std::log(2.0)) - std::log2(c)) / X;
  CHECK(h == doctest::Approx(lorentzian_entropy(a)).epsilon(1e-5));
}

TEST_CASE("gaussian entropy is the maximum at fixed variance") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    // Symmetric mixtures of two Gaussians sharing a center are unimodal.
    const double s1 = 0.3 + u(rng), s2 = 0.3 + 2.0 * u(rng), w = u(rng);
    std::vector<double> v;
    const double step = 0.005;
    for (int i = 0; i < 4000; ++i) {
      const double x = -10.0 + (i + 0.5) * step;
      v.push_back(w * oracle::gaussian(x, s1) + (1.0 - w) * oracle::gaussian(x, s2));
    }
    const Grid1D g = Grid1D::normalized(-10.0 + step / 2, step, v);
    const double sigma = std::sqrt(w * s1 * s1 + (1.0 - w) * s2 * s2);
    CHECK(continuous_entropy(g) <= gaussian_max_entropy(sigma) + 1e-9);
  }
}

TEST_CASE("timing pipeline matches the max-entropy value") {
  const double sigma = observed_timing_sigma(intrinsic_timing_sigma(20.0, 292.0), 20e-12, 20e-12).sigma_observed;
  const double dt = sigma / 50.0;
  const Grid1D g = timing_difference_density(sigma, dt / 10.0);
  const auto cg = tophat_bin(g, dt);
  const double b = entropy_bound(cg, BoundKind::DiffVariable, true).value_bits;
  CHECK(std::abs(b - gaussian_max_entropy(sigma)) < 0.05);
}

TEST_CASE("unit conversions") {
  const double lam = 1550e-9;
  const double dw = delta_omega_from_delta_lambda(8.8e-12, lam);
  CHECK(dw == doctest::Approx(2.0 * kPi * 2.99792458e8 * 8.8e-12 / (lam * lam)));
  CHECK(delta_lambda_from_delta_omega(dw, lam) == doctest::Approx(8.8e-12));
  CHECK(frequency_from_wavelength(lam) == doctest::Approx(2.99792458e8 / lam));
}
