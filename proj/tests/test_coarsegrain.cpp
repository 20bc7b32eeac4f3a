#include <doctest.h>

#include <cmath>
#include <random>

#include "entrocert/coarsegrain.hpp"
#include "entrocert/errors.hpp"
#include "entrocert/spdc.hpp"
#include "oracles.hpp"

using namespace entrocert;

namespace {

Grid2D bivariate(double sigma_a, double sigma_b, double rho, double half_a, double half_b, double step) {
  const auto na = static_cast<std::size_t>(std::round(2.0 * half_a / step));
  const auto nb = static_cast<std::size_t>(std::round(2.0 * half_b / step));
  std::vector<double> v(na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    const double x = -half_a + (i + 0.5) * step;
    for (std::size_t j = 0; j < nb; ++j) {
      const double y = -half_b + (j + 0.5) * step;
      const double zx = x / sigma_a, zy = y / sigma_b;
      v[i * nb + j] = std::exp(-(zx * zx - 2.0 * rho * zx * zy + zy * zy) / (2.0 * (1.0 - rho * rho)));
    }
  }
  return Grid2D::normalized(-half_a + 0.5 * step, step, na, -half_b + 0.5 * step, step, nb, std::move(v));
}

}  // namespace

TEST_CASE("top-hat binning examples") {
  const Grid1D uniform = Grid1D::normalized(0.005, 0.01, std::vector<double>(100, 1.0));
  const auto cg = tophat_bin(uniform, 0.25);
  REQUIRE(cg.probs.size() == 4);
  for (double p : cg.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(entropy_bound(cg, BoundKind::Marginal, true).value_bits == doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937_64 rng(2);
  const Grid1D any = Grid1D::normalized(0.05, 0.1, oracle::random_prob(rng, 30));
  const auto whole = tophat_bin(any, 3.0);
  REQUIRE(whole.probs.size() == 1);
  CHECK(shannon_entropy(whole.probs) == 0.0);

  // Widths that are not a multiple of the step use exact overlaps.
  const auto odd = tophat_bin(uniform, 0.333);
  double s = 0.0;
  for (double p : odd.probs) s += p;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(odd.probs[0] == doctest::Approx(0.333).epsilon(1e-12));
}

TEST_CASE("case 0 bound sits above the continuous entropy") {
  const Grid2D g = bivariate(1.0, 1.0, 0.8, 6.0, 6.0, 0.02);
  const double h = oracle::bivariate_conditional(1.0, 0.8);
  for (double d : {2.0, 1.0, 0.5, 0.25}) {
    const auto cg = tophat_bin(g, d, d);
    const auto b = conditional_entropy_bound(cg, 1.0, true);
    CHECK(b.value_bits >= h - 1e-6);
    CHECK(b.kind == BoundKind::Conditional);
  }
}

TEST_CASE("filter sampling examples") {
  // Product of two top-hat densities tiled exactly by top-hat filters equals binning.
  const Grid2D flat = Grid2D::normalized(0.0125, 0.025, 80, 0.0125, 0.025, 80, std::vector<double>(6400, 1.0));
  const auto bank = FilterBank::regular(FilterProfile::top_hat(0.5), 0.25, 0.5, 4);
  const auto sampled = filter_sample_joint(flat, bank, bank);
  const auto binned = tophat_bin(flat, 0.5, 0.5);
  for (std::size_t k = 0; k < 16; ++k)
    CHECK(sampled.probs.values()[k] == doctest::Approx(binned.probs.values()[k]).epsilon(1e-12));
  CHECK(sampled.coverage == doctest::Approx(1.0));

  // Independent Gaussians give a factorized table.
  const Grid2D ind = bivariate(1.0, 1.5, 0.0, 8.0, 12.0, 0.02);
  const auto la = FilterBank::regular(FilterProfile::lorentzian(0.8), -7.5, 1.0, 16);
  const auto lb = FilterBank::regular(FilterProfile::lorentzian(0.8), -11.5, 1.0, 24);
  const auto cg = filter_sample_joint(ind, la, lb);
  const auto ma = cg.probs.marginal_a(), mb = cg.probs.marginal_b();
  for (std::size_t m = 0; m < 16; m += 3)
    for (std::size_t n = 0; n < 24; n += 5)
      CHECK(cg.probs(m, n) == doctest::Approx(ma[m] * mb[n]).epsilon(1e-9));
}

TEST_CASE("narrow anti-correlated ridge concentrates on the anti-diagonal") {
  SpdcParams p;
  p.pump_sigma_rad_per_s = 0.05;
  p.phasematch_sigma_rad_per_s = 20.0;
  const double step = 0.0025;
  const std::size_t n = 1600;
  const Grid2D rho = joint_spectral_density(p, GridSpec2D{-2.0 + step / 2, step, n, -2.0 + step / 2, step, n});
  const auto bank = FilterBank::regular(FilterProfile::lorentzian(0.7), -1.75, 0.5, 8);
  const auto cg = filter_sample_joint(rho, bank, bank, SampleOptions{0.5, 0.6, 20.0});
  double anti = 0.0;
  for (std::size_t m = 0; m < 8; ++m) anti += cg.probs(m, 7 - m);
  double best_off = 0.0;
  for (std::size_t m = 0; m < 8; ++m)
    for (std::size_t k = 0; k < 8; ++k)
      if (k + m != 7) best_off = std::max(best_off, cg.probs(m, k));
  for (std::size_t m = 0; m < 8; ++m) CHECK(cg.probs(m, 7 - m) > best_off * 0.999);
  CHECK(anti > 0.2);
  CHECK(conditional_entropy(cg.probs) < conditional_entropy(ProbMatrix::product(cg.probs.marginal_a(), cg.probs.marginal_b())));
}

TEST_CASE("conditional bound arithmetic") {
  CoarseGrained2D diag{ProbMatrix(2, 2, {0.5, 0.0, 0.0, 0.5}), 1.0, 1.0, 0.0, 0.0, 1.0, {}};
  for (double w0 : {1.0, 0.5, 0.1}) CHECK(conditional_entropy_bound(diag, w0, true).value_bits == doctest::Approx(0.0));
  // H(A|B) = 2 bits: uniform 4x4 product.
  CoarseGrained2D flat{ProbMatrix(4, 4, std::vector<double>(16, 1.0 / 16)), 1.0, 1.0, 0.0, 0.0, 1.0, {}};
  const auto b = conditional_entropy_bound(flat, 0.9, true);
  CHECK(b.value_bits == doctest::Approx(2.0 / 0.9).epsilon(1e-12));
  CHECK(b.correction_w0 == 0.9);
  CHECK_THROWS_AS(conditional_entropy_bound(flat, 0.0, true), ConfigError);
  CHECK_THROWS_AS(conditional_entropy_bound(flat, 1.5, true), ConfigError);
  CHECK_FALSE(conditional_entropy_bound(flat, 1.0, false).valid);
  CHECK(joint_entropy_bound(flat, true).value_bits == doctest::Approx(4.0));
}

TEST_CASE("sum and difference distributions") {
  CoarseGrained2D prod{ProbMatrix(2, 2, {0.25, 0.25, 0.25, 0.25}), 1.0, 1.0, 0.0, 0.0, 1.0, {}};
  const auto s = sum_variable_distribution(prod);
  REQUIRE(s.probs.size() == 3);
  CHECK(s.probs[0] == doctest::Approx(0.25));
  CHECK(s.probs[1] == doctest::Approx(0.5));
  CHECK(s.straddle == 2.0);
  const auto d = diff_variable_distribution(prod);
  CHECK(d.probs[1] == doctest::Approx(0.5));

  CoarseGrained2D anti{ProbMatrix(2, 2, {0.0, 0.5, 0.5, 0.0}), 1.0, 1.0, 0.0, 0.0, 1.0, {}};
  CHECK(sum_variable_distribution(anti).probs[1] == doctest::Approx(1.0));
  CoarseGrained2D diag{ProbMatrix(2, 2, {0.5, 0.0, 0.0, 0.5}), 1.0, 1.0, 0.0, 0.0, 1.0, {}};
  CHECK(diff_variable_distribution(diag).probs[1] == doctest::Approx(1.0));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = oracle::random_prob(rng, 12);
    CoarseGrained2D cg{ProbMatrix(3, 4, w), 0.5, 0.5, 0.0, 0.0, 1.0, {}};
    std::vector<double> sum(6, 0.0), diff(6, 0.0);
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t n = 0; n < 4; ++n) {
        sum[m + n] += w[m * 4 + n];
        diff[m + 3 - n] += w[m * 4 + n];
      }
    const auto ss = sum_variable_distribution(cg), dd = diff_variable_distribution(cg);
    double total = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(ss.probs[k] == doctest::Approx(sum[k]).epsilon(1e-14));
      CHECK(dd.probs[k] == doctest::Approx(diff[k]).epsilon(1e-14));
      total += ss.probs[k];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  CoarseGrained2D unequal{ProbMatrix(2, 2, {0.25, 0.25, 0.25, 0.25}), 1.0, 2.0, 0.0, 0.0, 1.0, {}};
  CHECK_THROWS_AS(sum_variable_distribution(unequal), DimensionMismatch);
}

TEST_CASE("sum variable bound stays above the sum entropy") {
  SpdcParams p;
  p.pump_sigma_rad_per_s = 0.3;
  p.phasematch_sigma_rad_per_s = 2.0;
  const double step = 0.01;
  const std::size_t n = 800;
  const Grid2D rho = joint_spectral_density(p, GridSpec2D{-4.0 + step / 2, step, n, -4.0 + step / 2, step, n});
  for (double d : {0.4, 0.2, 0.1}) {
    const auto cg = tophat_bin(rho, d, d);
    const auto b = entropy_bound(sum_variable_distribution(cg), BoundKind::SumVariable, true);
    CHECK(b.value_bits >= oracle::gaussian_entropy(0.3) - 1e-6);
  }
  CHECK_THROWS_AS(entropy_bound(sum_variable_distribution(tophat_bin(rho, 0.4, 0.4)), BoundKind::Conditional, true),
                  KindMismatch);
}

TEST_CASE("resolution and coverage preconditions") {
  const Grid2D g = bivariate(1.0, 1.0, 0.5, 6.0, 6.0, 0.1);
  const auto narrow = FilterBank::regular(FilterProfile::lorentzian(0.5), -5.5, 1.0, 12);
  CHECK_THROWS_AS(filter_sample_joint(g, narrow, narrow), ResolutionError);
  const auto small = FilterBank::regular(FilterProfile::lorentzian(4.0), -0.5, 1.0, 2);
  CHECK_THROWS_AS(filter_sample_joint(g, small, small), CoverageFailure);
}

TEST_CASE("filtered density is majorized by the density") {
  // One axis: sampling with a passing bank mixes, so the per-bin density is flatter.
  std::vector<double> v;
  const double step = 0.01;
  for (int i = 0; i < 1200; ++i) v.push_back(oracle::gaussian(-6.0 + (i + 0.5) * step, 1.0));
  const Grid1D rho = Grid1D::normalized(-6.0 + step / 2, step, v);
  const auto bank = FilterBank::regular(FilterProfile::lorentzian(0.35), -5.875, 0.25, 48);
  const auto cg = filter_sample(rho, bank, SampleOptions{0.5, 0.6, 20.0});
  std::vector<double> bar;
  for (double p : cg.probs) bar.push_back(p / 0.25);
  const auto fine = dominance_curve(rho);
  const auto coarse = dominance_curve(Grid1D(cg.axis_origin, 0.25, bar));
  // Compare at every measure of the coarse curve by interpolating the fine one.
  std::size_t j = 0;
  for (const auto& pt : coarse) {
    while (j + 1 < fine.size() && fine[j + 1].measure < pt.measure) ++j;
    const double mass_fine = j + 1 < fine.size()
                                 ? fine[j].mass + (fine[j + 1].mass - fine[j].mass) * (pt.measure - fine[j].measure) /
                                                      (fine[j + 1].measure - fine[j].measure)
                                 : 1.0;
    CHECK(pt.mass <= mass_fine + 1e-9);
  }
}

TEST_CASE("convergence report") {
  const Grid2D g = bivariate(1.0, 1.0, 0.9, 8.0, 8.0, 0.01);
  std::vector<BankPair> family;
  for (double d : {2.0, 1.0, 0.5, 0.25}) {
    const auto count = static_cast<std::size_t>(std::round(16.0 / d));
    const auto bank = FilterBank::regular(FilterProfile::top_hat(d), -8.0 + d / 2, d, count);
    family.push_back({bank, bank});
  }
  const auto steps = refine_convergence_report(g, family);
  REQUIRE(steps.size() == 4);
  for (std::size_t k = 1; k < steps.size(); ++k) CHECK(steps[k].bound_bits <= steps[k - 1].bound_bits + 1e-12);
  for (const auto& s : steps) CHECK(s.majorization_ok);
  CHECK_THROWS_AS(refine_convergence_report(g, {family[0], family[1]}), ConfigError);

  const Grid2D flat = Grid2D::normalized(0.005, 0.01, 400, 0.005, 0.01, 400, std::vector<double>(160000, 1.0));
  std::vector<BankPair> ff;
  for (double d : {4.0, 2.0, 1.0}) {
    const auto count = static_cast<std::size_t>(std::round(4.0 / d));
    const auto bank = FilterBank::regular(FilterProfile::top_hat(d), d / 2, d, count);
    ff.push_back({bank, bank});
  }
  const auto fs = refine_convergence_report(flat, ff);
  CHECK(fs[0].bound_bits == doctest::Approx(std::log2(4.0)).epsilon(1e-12));
  CHECK(fs[1].bound_bits == doctest::Approx(fs[0].bound_bits).epsilon(1e-12));
  CHECK(fs[2].bound_bits == doctest::Approx(fs[0].bound_bits).epsilon(1e-12));
}

TEST_CASE("fixed-bank check and case 1 reduction") {
  const auto good = FilterBank::regular(FilterProfile::lorentzian(1.0), 0.0, 1.0, 4);
  const auto bad = FilterBank::regular(FilterProfile::lorentzian(0.5), 0.0, 1.0, 4);
  CHECK(check_bank(good).all_majorized);
  CHECK_FALSE(check_bank(bad).all_majorized);
  CHECK(check_bank(bad).min_margin < 0.0);

  const Grid2D g = bivariate(2.0, 2.0, 0.7, 12.0, 12.0, 0.04);
  const auto bank = FilterBank::regular(FilterProfile::lorentzian(1.0), -11.5, 1.0, 24);
  const auto cg = filter_sample_joint(g, bank, bank);
  const double w0 = bank_weights(bank).w0;
  CHECK(w0 == 1.0);
  CHECK(conditional_entropy_bound(cg, w0, true).value_bits == conditional_entropy_bound(cg, 1.0, true).value_bits);
}
