#pragma once

// Reference values computed without the library: closed forms, direct
// summation and an adaptive integrator. Nothing here includes entrocert.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kE = std::numbers::e;

inline double plogp_sum(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log2(x);
  return h;
}

/// Differential entropy of N(0, sigma^2) in bits.
inline double gaussian_entropy(double sigma) { return 0.5 * std::log2(2.0 * kPi * kE * sigma * sigma); }

/// h(A|B) of a bivariate normal with marginal sigma_a and correlation rho.
inline double bivariate_conditional(double sigma_a, double rho) {
  return gaussian_entropy(sigma_a * std::sqrt(1.0 - rho * rho));
}

inline double lorentzian(double x, double fwhm, double center = 0.0) {
  const double g = 0.5 * fwhm;
  return g / (kPi * ((x - center) * (x - center) + g * g));
}

inline double gaussian(double x, double sigma, double center = 0.0) {
  const double z = (x - center) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

namespace detail {
inline double adaptive(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive(f, a, b, fa, fm, fb, whole, tol, 48);
}

/// Minimum ratio of two Lorentzians of equal width, centers `shift_hwhm`
/// half-widths apart, by dense scan plus the tail limit (which is 1).
inline double lorentz_shift_min_ratio(double shift_hwhm) {
  double best = 1.0;
  for (int i = -400000; i <= 400000; ++i) {
    const double x = i * 1e-4;
    best = std::min(best, (1.0 + x * x) / (1.0 + (x - shift_hwhm) * (x - shift_hwhm)));
  }
  return best;
}

/// Random probability vector with `n` entries.
inline std::vector<double> random_prob(std::mt19937_64& rng, std::size_t n, double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) {
    x = u(rng) < zero_fraction ? 0.0 : -std::log(u(rng) + 1e-300);
    s += x;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& x : p) x /= s;
  return p;
}

/// Convex mixture of `k` random permutation matrices, row-major n x n.
inline std::vector<double> random_doubly_stochastic(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<double> t(n * n, 0.0);
  const auto w = random_prob(rng, k);
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) t[i * n + perm[i]] += w[j];
  }
  return t;
}

}  // namespace oracle
