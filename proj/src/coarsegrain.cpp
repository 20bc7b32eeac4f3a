#include "entrocert/coarsegrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "entrocert/errors.hpp"
#include "entrocert/numeric.hpp"
#include "entrocert/parallel.hpp"

namespace entrocert {

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::Joint:
      return "joint";
    case BoundKind::Conditional:
      return "conditional";
    case BoundKind::Marginal:
      return "marginal";
    case BoundKind::SumVariable:
      return "sum_variable";
    case BoundKind::DiffVariable:
      return "diff_variable";
  }
  return "unknown";
}

BoundKind bound_kind_from_string(const std::string& name) {
  for (BoundKind k : {BoundKind::Joint, BoundKind::Conditional, BoundKind::Marginal,
                      BoundKind::SumVariable, BoundKind::DiffVariable}) {
    if (to_string(k) == name) return k;
  }
  throw SchemaError("unknown bound kind '" + name + "'");
}

namespace {

struct Piece {
  std::size_t bin;
  double fraction;
};

// For each grid cell, the bins it overlaps and the overlapped fraction.
// Positions are measured from the grid's lower edge, which is also bin 0's lower edge.
std::vector<std::vector<Piece>> overlap_table(double step, std::size_t cells, double width,
                                              std::size_t bins) {
  std::vector<std::vector<Piece>> out(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double lo = static_cast<double>(i) * step;
    const double hi = lo + step;
    auto k = static_cast<std::size_t>(std::floor(lo / width));
    for (; k < bins; ++k) {
      const double blo = static_cast<double>(k) * width;
      const double bhi = blo + width;
      if (blo >= hi) break;
      const double ov = std::min(hi, bhi) - std::max(lo, blo);
      if (ov > 0.0) out[i].push_back({k, ov / step});
    }
    // Rounding can leave a cell a hair past the last bin edge.
    double got = 0.0;
    for (const auto& p : out[i]) got += p.fraction;
    if (out[i].empty())
      out[i].push_back({bins - 1, 1.0});
    else if (got < 1.0)
      out[i].back().fraction += 1.0 - got;
  }
  return out;
}

std::size_t bin_count(double extent, double width) {
  const double raw = extent / width;
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) <= 1e-9 * std::max(1.0, raw)) return std::max<std::size_t>(1, static_cast<std::size_t>(rounded));
  return static_cast<std::size_t>(std::ceil(raw));
}

void require_positive_width(double w, const char* what) {
  if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError(std::string(what) + " must be positive");
}

// Row m: integral of filter m over each grid cell.
std::vector<double> response_matrix(double lower_edge, double step, std::size_t cells,
                                    const FilterBank& bank) {
  std::vector<double> r(bank.size() * cells);
  parallel_for(bank.size(), [&](std::size_t m) {
    const FilterProfile& f = bank[m];
    for (std::size_t i = 0; i < cells; ++i) {
      const double lo = lower_edge + static_cast<double>(i) * step;
      r[m * cells + i] = f.mass(lo, lo + step);
    }
  });
  return r;
}

// Fraction of each grid cell lying inside [lo, hi].
std::vector<double> inside_fraction(double lower_edge, double step, std::size_t cells, double lo,
                                    double hi) {
  std::vector<double> out(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = lower_edge + static_cast<double>(i) * step;
    out[i] = std::clamp((std::min(hi, a + step) - std::max(lo, a)) / step, 0.0, 1.0);
  }
  return out;
}

void check_resolution(const FilterBank& bank, double step, double min_points, const char* axis) {
  const double pts = bank.narrowest_width() / step;
  if (pts < min_points * (1.0 - 1e-9)) {
    std::ostringstream os;
    os << "grid on axis " << axis << " resolves the narrowest filter width with " << pts
       << " points; at least " << min_points << " required";
    throw ResolutionError(os.str());
  }
}

void apply_coverage(double coverage, const SampleOptions& options, std::vector<std::string>& warnings) {
  if (coverage < options.coverage_error) {
    std::ostringstream os;
    os << "filter banks cover only " << coverage << " of the density mass (minimum "
       << options.coverage_error << ")";
    throw CoverageFailure(os.str(), coverage);
  }
  if (coverage < options.coverage_warn) {
    std::ostringstream os;
    os << "filter banks cover " << coverage << " of the density mass (below " << options.coverage_warn
       << ")";
    warnings.push_back(os.str());
  }
}

}  // namespace

CoarseGrained1D tophat_bin(const Grid1D& g, double width) {
  require_positive_width(width, "bin width");
  const double extent = g.upper_edge() - g.lower_edge();
  const std::size_t bins = bin_count(extent, width);
  const auto table = overlap_table(g.step(), g.size(), width, bins);
  std::vector<double> mass(bins, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const auto& p : table[i]) mass[p.bin] += g[i] * g.step() * p.fraction;
  }
  CoarseGrained1D out;
  out.probs = ProbVector::normalize(std::move(mass));
  out.bin_width = width;
  out.axis_origin = g.lower_edge() + 0.5 * width;
  return out;
}

CoarseGrained2D tophat_bin(const Grid2D& g, double width_a, double width_b) {
  require_positive_width(width_a, "bin width A");
  require_positive_width(width_b, "bin width B");
  const double lo_a = g.start_a() - 0.5 * g.step_a();
  const double lo_b = g.start_b() - 0.5 * g.step_b();
  const std::size_t bins_a = bin_count(static_cast<double>(g.count_a()) * g.step_a(), width_a);
  const std::size_t bins_b = bin_count(static_cast<double>(g.count_b()) * g.step_b(), width_b);
  const auto ta = overlap_table(g.step_a(), g.count_a(), width_a, bins_a);
  const auto tb = overlap_table(g.step_b(), g.count_b(), width_b, bins_b);
  const double cell = g.step_a() * g.step_b();

  // Bin columns first (per row, in parallel), then accumulate rows in order.
  std::vector<double> partial(g.count_a() * bins_b, 0.0);
  parallel_for(g.count_a(), [&](std::size_t i) {
    double* row = partial.data() + i * bins_b;
    for (std::size_t j = 0; j < g.count_b(); ++j) {
      const double v = g(i, j) * cell;
      if (v == 0.0) continue;
      for (const auto& p : tb[j]) row[p.bin] += v * p.fraction;
    }
  });
  std::vector<double> mass(bins_a * bins_b, 0.0);
  for (std::size_t i = 0; i < g.count_a(); ++i) {
    for (const auto& pa : ta[i]) {
      for (std::size_t kb = 0; kb < bins_b; ++kb)
        mass[pa.bin * bins_b + kb] += partial[i * bins_b + kb] * pa.fraction;
    }
  }
  CoarseGrained2D out;
  out.probs = ProbMatrix::normalize(bins_a, bins_b, std::move(mass));
  out.bin_width_a = width_a;
  out.bin_width_b = width_b;
  out.origin_a = lo_a + 0.5 * width_a;
  out.origin_b = lo_b + 0.5 * width_b;
  return out;
}

CoarseGrained2D filter_sample_joint(const Grid2D& rho, const FilterBank& bank_a,
                                    const FilterBank& bank_b, const SampleOptions& options) {
  if (bank_a.size() == 0 || bank_b.size() == 0) throw ConfigError("filter bank is empty");
  check_resolution(bank_a, rho.step_a(), options.min_points_per_width, "A");
  check_resolution(bank_b, rho.step_b(), options.min_points_per_width, "B");

  const std::size_t na = rho.count_a(), nb = rho.count_b();
  const std::size_t ma = bank_a.size(), mb = bank_b.size();
  const double lo_a = rho.start_a() - 0.5 * rho.step_a();
  const double lo_b = rho.start_b() - 0.5 * rho.step_b();

  CoarseGrained2D out;
  {
    const auto ia = inside_fraction(lo_a, rho.step_a(), na, bank_a.span_lo(), bank_a.span_hi());
    const auto ib = inside_fraction(lo_b, rho.step_b(), nb, bank_b.span_lo(), bank_b.span_hi());
    std::vector<double> rows(na, 0.0);
    parallel_for(na, [&](std::size_t i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < nb; ++j) acc += rho(i, j) * ib[j];
      rows[i] = acc * ia[i] * rho.step_a() * rho.step_b();
    });
    out.coverage = std::min(1.0, numeric::stable_sum(rows));
  }
  apply_coverage(out.coverage, options, out.warnings);

  const auto fa = response_matrix(lo_a, rho.step_a(), na, bank_a);
  const auto fb = response_matrix(lo_b, rho.step_b(), nb, bank_b);

  // t[i][n] = sum_j rho[i][j] fb[n][j]
  std::vector<double> t(na * mb, 0.0);
  parallel_for(na, [&](std::size_t i) {
    const double* r = rho.values().data() + i * nb;
    for (std::size_t n = 0; n < mb; ++n) {
      const double* f = fb.data() + n * nb;
      double acc = 0.0;
      for (std::size_t j = 0; j < nb; ++j) acc += r[j] * f[j];
      t[i * mb + n] = acc;
    }
  });
  // p[m][n] = sum_i fa[m][i] t[i][n]
  std::vector<double> p(ma * mb, 0.0);
  parallel_for(ma, [&](std::size_t m) {
    const double* f = fa.data() + m * na;
    double* row = p.data() + m * mb;
    for (std::size_t i = 0; i < na; ++i) {
      const double w = f[i];
      if (w == 0.0) continue;
      const double* ti = t.data() + i * mb;
      for (std::size_t n = 0; n < mb; ++n) row[n] += w * ti[n];
    }
  });

  out.probs = ProbMatrix::normalize(ma, mb, std::move(p));
  out.bin_width_a = bank_a.nominal_spacing();
  out.bin_width_b = bank_b.nominal_spacing();
  out.origin_a = bank_a.nominal_centers().front();
  out.origin_b = bank_b.nominal_centers().front();
  return out;
}

CoarseGrained1D filter_sample(const Grid1D& rho, const FilterBank& bank, const SampleOptions& options) {
  if (bank.size() == 0) throw ConfigError("filter bank is empty");
  check_resolution(bank, rho.step(), options.min_points_per_width, "A");
  const auto inside = inside_fraction(rho.lower_edge(), rho.step(), rho.size(), bank.span_lo(),
                                      bank.span_hi());
  std::vector<double> cov(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) cov[i] = rho[i] * rho.step() * inside[i];
  std::vector<std::string> warnings;
  apply_coverage(std::min(1.0, numeric::stable_sum(cov)), options, warnings);

  const auto f = response_matrix(rho.lower_edge(), rho.step(), rho.size(), bank);
  std::vector<double> p(bank.size(), 0.0);
  for (std::size_t m = 0; m < bank.size(); ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) acc += f[m * rho.size() + i] * rho[i];
    p[m] = acc * rho.step();
  }
  CoarseGrained1D out;
  out.probs = ProbVector::normalize(std::move(p));
  out.bin_width = bank.nominal_spacing();
  out.axis_origin = bank.nominal_centers().front();
  return out;
}

EntropyBound conditional_entropy_bound(const CoarseGrained2D& cg, double w0, bool precondition_met,
                                       Axis condition_on) {
  if (!(w0 > 0.0) || w0 > 1.0) {
    std::ostringstream os;
    os << "w0 must lie in (0, 1], got " << w0;
    throw ConfigError(os.str());
  }
  const double h = conditional_entropy(cg.probs, condition_on);
  const double width = condition_on == Axis::B ? cg.bin_width_a : cg.bin_width_b;
  EntropyBound b;
  b.kind = BoundKind::Conditional;
  b.correction_w0 = w0;
  b.value_bits = h / w0 + std::log2(width);
  b.valid = precondition_met;
  std::ostringstream os;
  os.precision(12);
  os << (condition_on == Axis::B ? "H(A|B)=" : "H(B|A)=") << h << " bits over " << cg.probs.rows()
     << "x" << cg.probs.cols() << " cells; w0=" << w0 << "; bin width=" << width;
  if (!precondition_met) os << "; majorization precondition not met";
  b.provenance = os.str();
  return b;
}

EntropyBound joint_entropy_bound(const CoarseGrained2D& cg, bool precondition_met) {
  const double h = joint_entropy(cg.probs);
  EntropyBound b;
  b.kind = BoundKind::Joint;
  b.value_bits = h + std::log2(cg.bin_width_a) + std::log2(cg.bin_width_b);
  b.valid = precondition_met;
  std::ostringstream os;
  os.precision(12);
  os << "H(A,B)=" << h << " bits; bin widths=" << cg.bin_width_a << "," << cg.bin_width_b;
  b.provenance = os.str();
  return b;
}

EntropyBound entropy_bound(const CoarseGrained1D& cg, BoundKind kind, bool precondition_met) {
  if (kind == BoundKind::Joint || kind == BoundKind::Conditional)
    throw KindMismatch("one-dimensional data cannot carry a " + to_string(kind) + " bound");
  const double h = shannon_entropy(cg.probs);
  EntropyBound b;
  b.kind = kind;
  b.value_bits = h + std::log2(cg.straddle * cg.bin_width);
  b.valid = precondition_met;
  std::ostringstream os;
  os.precision(12);
  os << "H=" << h << " bits over " << cg.probs.size() << " bins; bin width=" << cg.bin_width;
  if (cg.straddle != 1.0) os << "; straddle=" << cg.straddle;
  b.provenance = os.str();
  return b;
}

namespace {

void require_equal_widths(const CoarseGrained2D& cg) {
  if (std::abs(cg.bin_width_a - cg.bin_width_b) > 1e-9 * std::max(cg.bin_width_a, cg.bin_width_b))
    throw DimensionMismatch("sum/difference variables need equal bin widths on both axes");
}

}  // namespace

CoarseGrained1D sum_variable_distribution(const CoarseGrained2D& cg) {
  require_equal_widths(cg);
  const std::size_t rows = cg.probs.rows(), cols = cg.probs.cols();
  std::vector<double> p(rows + cols - 1, 0.0);
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t n = 0; n < cols; ++n) p[m + n] += cg.probs(m, n);
  CoarseGrained1D out;
  out.probs = ProbVector::normalize(std::move(p));
  out.bin_width = cg.bin_width_a;
  out.axis_origin = cg.origin_a + cg.origin_b;
  out.straddle = 2.0;
  return out;
}

CoarseGrained1D diff_variable_distribution(const CoarseGrained2D& cg) {
  require_equal_widths(cg);
  const std::size_t rows = cg.probs.rows(), cols = cg.probs.cols();
  std::vector<double> p(rows + cols - 1, 0.0);
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t n = 0; n < cols; ++n) p[m + cols - 1 - n] += cg.probs(m, n);
  CoarseGrained1D out;
  out.probs = ProbVector::normalize(std::move(p));
  out.bin_width = cg.bin_width_a;
  out.axis_origin = cg.origin_a - cg.origin_b - static_cast<double>(cols - 1) * cg.bin_width_b;
  out.straddle = 2.0;
  return out;
}

BankCheck check_bank(const FilterBank& bank) {
  BankCheck c;
  c.per_filter.reserve(bank.size());
  for (std::size_t n = 0; n < bank.size(); ++n) {
    c.per_filter.push_back(majorized_by_tophat(bank[n], bank.nominal_spacing()));
    const auto& r = c.per_filter.back();
    if (!r.verdict) c.all_majorized = false;
    if (n == 0 || r.margin < c.min_margin) {
      c.min_margin = r.margin;
      c.worst_index = n;
    }
  }
  return c;
}

std::vector<ConvergenceStep> refine_convergence_report(const Grid2D& rho,
                                                       const std::vector<BankPair>& family,
                                                       Axis condition_on, const SampleOptions& options) {
  if (family.size() < 3) throw ConfigError("convergence report needs at least 3 resolutions");
  std::vector<ConvergenceStep> steps;
  steps.reserve(family.size());
  for (const auto& pair : family) {
    const BankCheck ca = check_bank(pair.a);
    const BankCheck cb = check_bank(pair.b);
    const auto cg = filter_sample_joint(rho, pair.a, pair.b, options);
    ConvergenceStep s;
    s.spacing_a = pair.a.nominal_spacing();
    s.spacing_b = pair.b.nominal_spacing();
    s.majorization_ok = ca.all_majorized && cb.all_majorized;
    s.margin = std::min(ca.min_margin * s.spacing_a, cb.min_margin * s.spacing_b);
    s.bound_bits = conditional_entropy_bound(cg, 1.0, s.majorization_ok, condition_on).value_bits;
    steps.push_back(s);
  }
  return steps;
}

}  // namespace entrocert
