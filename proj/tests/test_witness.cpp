#include <doctest.h>

#include <cmath>
#include <random>

#include "entrocert/coarsegrain.hpp"
#include "entrocert/errors.hpp"
#include "entrocert/spdc.hpp"
#include "entrocert/witness.hpp"

using namespace entrocert;

namespace {

EntropyBound bound(double v, BoundKind k, bool valid = true) {
  EntropyBound b;
  b.value_bits = v;
  b.kind = k;
  b.valid = valid;
  return b;
}

}  // namespace

TEST_CASE("thresholds") {
  CHECK(witness_threshold(Inequality::Conditional) == doctest::Approx(3.0942).epsilon(1e-4));
  CHECK(witness_threshold(Inequality::SumDiff) - witness_threshold(Inequality::Conditional) == 1.0);
  CHECK(inequality_from_string("sum-diff") == Inequality::SumDiff);
  CHECK(inequality_from_string("conditional") == Inequality::Conditional);
  CHECK_THROWS_AS(inequality_from_string("eq3"), ConfigError);
}

TEST_CASE("witness examples") {
  const auto r = evaluate_witness(bound(-30.342, BoundKind::DiffVariable), bound(33.0, BoundKind::Conditional),
                                  Inequality::Conditional);
  CHECK(r.margin == doctest::Approx(std::log2(M_PI * M_E) - 2.658).epsilon(1e-12));
  CHECK(r.margin == doctest::Approx(0.436).epsilon(1e-3));
  CHECK(r.certified);
  CHECK_FALSE(r.notes.empty());

  const double thr = witness_threshold(Inequality::Conditional);
  const auto edge = evaluate_witness(bound(-30.0, BoundKind::DiffVariable), bound(thr + 30.0, BoundKind::Conditional),
                                     Inequality::Conditional);
  CHECK(edge.margin <= 0.0);
  CHECK_FALSE(edge.certified);

  const auto invalid = evaluate_witness(bound(-30.0, BoundKind::DiffVariable),
                                        bound(10.0, BoundKind::Conditional, false), Inequality::Conditional);
  CHECK(invalid.margin > 0.0);
  CHECK_FALSE(invalid.certified);
  CHECK_FALSE(invalid.preconditions_met);

  CHECK_THROWS_AS(evaluate_witness(bound(-30.0, BoundKind::Conditional), bound(10.0, BoundKind::SumVariable),
                                   Inequality::SumDiff),
                  KindMismatch);
  CHECK_THROWS_AS(evaluate_witness(bound(-30.0, BoundKind::DiffVariable), bound(10.0, BoundKind::Marginal),
                                   Inequality::Conditional),
                  KindMismatch);
}

TEST_CASE("larger bounds never help") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0), up(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double t = -30.0 + u(rng), f = 33.0 + u(rng);
    const auto a = evaluate_witness(bound(t, BoundKind::DiffVariable), bound(f, BoundKind::Conditional), Inequality::Conditional);
    const auto b = evaluate_witness(bound(t + up(rng), BoundKind::DiffVariable), bound(f + up(rng), BoundKind::Conditional),
                                    Inequality::Conditional);
    CHECK(b.margin <= a.margin);
    CHECK((!b.certified || a.certified));
    CHECK((!a.certified || (a.preconditions_met && a.margin > 0.0)));
  }
}

TEST_CASE("separable product states are never certified") {
  // Units with sigma_w = 1; the entropy sum is unit free. A product state's
  // single-photon times are at least Fourier limited, sigma_t >= 1/(2 sigma_w).
  const double step = 0.01;
  const std::size_t n = 1600;
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double x = -8.0 + (i + 0.5) * step, y = -8.0 + (j + 0.5) * step;
      v[i * n + j] = std::exp(-0.5 * (x * x + y * y));
    }
  const Grid2D freq = Grid2D::normalized(-8.0 + step / 2, step, n, -8.0 + step / 2, step, n, std::move(v));

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int draws = 0;
  for (int i = 0; i < 100; ++i) {
    const double dw = 0.05 + 1.95 * u(rng);
    const auto fb = conditional_entropy_bound(tophat_bin(freq, dw, dw), 1.0, true);
    for (int k = 0; k < 10; ++k, ++draws) {
      const double sigma_diff = std::sqrt(2.0) * (1.0 + 3.0 * u(rng)) / 2.0;
      const double dt = sigma_diff * (0.02 + 2.0 * u(rng));
      const Grid1D t = timing_difference_density(sigma_diff, dt / 20.0);
      const auto tb = entropy_bound(tophat_bin(t, dt), BoundKind::DiffVariable, true);
      const auto r = evaluate_witness(tb, fb, Inequality::Conditional);
      CHECK_FALSE(r.certified);
      CHECK(r.margin < 0.0);
    }
  }
  CHECK(draws == 1000);
}

TEST_CASE("budget chain") {
  const auto b = frequency_budget(-30.324, 1550e-9);
  CHECK(b.max_h_freq_bits == doctest::Approx(33.42).epsilon(0.02 / 33.42));
  CHECK(b.max_sigma_rad_per_s / (2.0 * M_PI) / 1e6 == doctest::Approx(442.0).epsilon(5.0 / 442.0));
  CHECK(b.max_fwhm_gauss_m * 1e12 == doctest::Approx(8.8).epsilon(0.9 / 8.8));
  CHECK(b.max_fwhm_lorentz_rad_per_s / (2.0 * M_PI) / 1e9 == doctest::Approx(0.29).epsilon(0.01 / 0.29));
  const auto half = frequency_budget(-30.324 - 1.0, 1550e-9);
  CHECK(half.max_h_freq_bits - b.max_h_freq_bits == doctest::Approx(1.0));
}

TEST_CASE("grating") {
  const double r = grating_resolution(600.0, 10.0, 193.4e12);
  CHECK(r / 1e9 == doctest::Approx(32.2).epsilon(0.1 / 32.2));
  CHECK(grating_resolution(600.0, 20.0, 193.4e12) == doctest::Approx(r / 2.0));
  const double lo = grating_beam_for_resolution(600.0, 1e9, 193.4e12);
  const double hi = grating_beam_for_resolution(600.0, 0.1e9, 193.4e12);
  CHECK(lo == doctest::Approx(322.3).epsilon(1e-3));
  CHECK(hi == doctest::Approx(3223.3).epsilon(1e-3));
}

TEST_CASE("ebits readings") {
  const auto e = ebits_lower_bound(0.063);
  CHECK(e.formula_e_based == doctest::Approx(2.546).epsilon(0.002 / 2.546));
  CHECK(e.formula_footnote == doctest::Approx(2.989).epsilon(0.002 / 2.989));
  CHECK(e.matches_reported == "formula_e_based");
  CHECK_FALSE(e.note.empty());
  CHECK(ebits_lower_bound(1.0 / M_E).formula_e_based == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(ebits_lower_bound(0.0), ConfigError);
}

TEST_CASE("margin grows as the pump narrows") {
  SpdcParams p;
  p.phasematch_sigma_rad_per_s = 2.0 * M_PI * 1e12;
  double last = -1e9;
  for (double sp : {1e9, 1e8, 1e7, 1e6}) {
    p.pump_sigma_rad_per_s = 2.0 * M_PI * sp;
    const double h = spdc_conditional_entropy(p);
    const auto r = evaluate_witness(bound(gaussian_max_entropy_fwhm(424e-12), BoundKind::DiffVariable),
                                    bound(h, BoundKind::Conditional), Inequality::Conditional);
    CHECK(r.margin > last + 3.0);
    last = r.margin;
  }
}
