#include "entrocert/probcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "entrocert/errors.hpp"
#include "entrocert/numeric.hpp"

namespace entrocert {
namespace {

void check_distribution(std::span<const double> p, const char* what) {
  if (p.empty()) throw InvalidDistribution(std::string(what) + ": empty distribution");
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidDistribution(std::string(what) + ": negative or non-finite probability");
  }
  const double total = numeric::stable_sum(p);
  if (std::abs(total - 1.0) > kDiscreteTolerance)
    throw InvalidDistribution(std::string(what) + ": probabilities sum to " +
                              std::to_string(total) + ", not 1");
}

std::vector<double> normalized_copy(std::vector<double> w, const char* what) {
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidDistribution(std::string(what) + ": negative or non-finite weight");
  }
  const double total = numeric::stable_sum(w);
  if (!(total > 0.0)) throw InvalidDistribution(std::string(what) + ": weights sum to zero");
  for (double& x : w) x /= total;
  return w;
}

// p * log2(p) with the 0 log 0 = 0 convention taken as an explicit branch.
double plog2p(double p) {
  if (p == 0.0) return 0.0;
  return p * std::log2(p);
}

void check_density_values(std::span<const double> values) {
  if (values.empty()) throw InvalidDensity("grid has no samples");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidDensity("density has negative or non-finite sample");
  }
}

std::vector<double> sorted_descending(std::span<const double> p, std::size_t n) {
  std::vector<double> s(p.begin(), p.end());
  s.resize(n, 0.0);
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

ProbVector::ProbVector(std::vector<double> p) : p_(std::move(p)) {
  check_distribution(p_, "ProbVector");
}

ProbVector ProbVector::normalize(std::vector<double> weights) {
  return ProbVector(normalized_copy(std::move(weights), "ProbVector::normalize"));
}

ProbVector ProbVector::uniform(std::size_t n) {
  if (n == 0) throw InvalidDistribution("ProbVector::uniform: n must be positive");
  return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ProbMatrix::ProbMatrix(std::size_t rows, std::size_t cols, std::vector<double> p)
    : rows_(rows), cols_(cols), p_(std::move(p)) {
  if (rows_ * cols_ != p_.size() || p_.empty())
    throw DimensionMismatch("ProbMatrix: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                            " does not match " + std::to_string(p_.size()) + " entries");
  check_distribution(p_, "ProbMatrix");
}

ProbMatrix ProbMatrix::normalize(std::size_t rows, std::size_t cols, std::vector<double> weights) {
  return ProbMatrix(rows, cols, normalized_copy(std::move(weights), "ProbMatrix::normalize"));
}

ProbMatrix ProbMatrix::product(const ProbVector& a, const ProbVector& b) {
  std::vector<double> p(a.size() * b.size());
  for (std::size_t m = 0; m < a.size(); ++m)
    for (std::size_t n = 0; n < b.size(); ++n) p[m * b.size() + n] = a[m] * b[n];
  return ProbMatrix::normalize(a.size(), b.size(), std::move(p));
}

ProbVector ProbMatrix::marginal_a() const {
  std::vector<double> out(rows_);
  for (std::size_t m = 0; m < rows_; ++m)
    out[m] = numeric::stable_sum(std::span<const double>(p_).subspan(m * cols_, cols_));
  return ProbVector::normalize(std::move(out));
}

ProbVector ProbMatrix::marginal_b() const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t m = 0; m < rows_; ++m)
    for (std::size_t n = 0; n < cols_; ++n) out[n] += p_[m * cols_ + n];
  return ProbVector::normalize(std::move(out));
}

// ---------------------------------------------------------------------------

Grid1D::Grid1D(double start, double step, std::vector<double> values)
    : start_(start), step_(step), values_(std::move(values)) {
  if (!std::isfinite(start_) || !(step_ > 0.0) || !std::isfinite(step_))
    throw InvalidDensity("Grid1D: step must be positive and finite");
  check_density_values(values_);
  const double total = step_ * numeric::stable_sum(values_);
  if (std::abs(total - 1.0) > kGridTolerance)
    throw InvalidDensity("Grid1D: density integrates to " + std::to_string(total));
}

Grid1D Grid1D::normalized(double start, double step, std::vector<double> values) {
  if (!(step > 0.0)) throw InvalidDensity("Grid1D: step must be positive");
  check_density_values(values);
  const double total = step * numeric::stable_sum(values);
  if (!(total > 0.0)) throw InvalidDensity("Grid1D: density has zero mass");
  for (double& v : values) v /= total;
  return Grid1D(start, step, std::move(values));
}

Grid2D::Grid2D(double start_a, double step_a, std::size_t count_a, double start_b, double step_b,
               std::size_t count_b, std::vector<double> values)
    : start_a_(start_a),
      step_a_(step_a),
      count_a_(count_a),
      start_b_(start_b),
      step_b_(step_b),
      count_b_(count_b),
      values_(std::move(values)) {
  if (!(step_a_ > 0.0) || !(step_b_ > 0.0)) throw InvalidDensity("Grid2D: steps must be positive");
  if (count_a_ * count_b_ != values_.size())
    throw DimensionMismatch("Grid2D: shape does not match sample count");
  check_density_values(values_);
  const double total = step_a_ * step_b_ * numeric::stable_sum(values_);
  if (std::abs(total - 1.0) > kGridTolerance)
    throw InvalidDensity("Grid2D: density integrates to " + std::to_string(total));
}

Grid2D Grid2D::normalized(double start_a, double step_a, std::size_t count_a, double start_b,
                          double step_b, std::size_t count_b, std::vector<double> values) {
  if (!(step_a > 0.0) || !(step_b > 0.0)) throw InvalidDensity("Grid2D: steps must be positive");
  check_density_values(values);
  const double total = step_a * step_b * numeric::stable_sum(values);
  if (!(total > 0.0)) throw InvalidDensity("Grid2D: density has zero mass");
  for (double& v : values) v /= total;
  return Grid2D(start_a, step_a, count_a, start_b, step_b, count_b, std::move(values));
}

Grid1D Grid2D::marginal_a() const {
  std::vector<double> out(count_a_);
  for (std::size_t i = 0; i < count_a_; ++i)
    out[i] = numeric::stable_sum(std::span<const double>(values_).subspan(i * count_b_, count_b_));
  return Grid1D::normalized(start_a_, step_a_, std::move(out));
}

Grid1D Grid2D::marginal_b() const {
  std::vector<double> out(count_b_, 0.0);
  for (std::size_t i = 0; i < count_a_; ++i)
    for (std::size_t j = 0; j < count_b_; ++j) out[j] += values_[i * count_b_ + j];
  return Grid1D::normalized(start_b_, step_b_, std::move(out));
}

// ---------------------------------------------------------------------------

DoublyStochasticOp::DoublyStochasticOp(std::size_t n, std::vector<double> t)
    : n_(n), t_(std::move(t)) {
  if (n_ == 0 || t_.size() != n_ * n_)
    throw DimensionMismatch("DoublyStochasticOp: expected " + std::to_string(n_) + "^2 entries");
  std::vector<double> col(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = t_[i * n_ + j];
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidDistribution("DoublyStochasticOp: negative entry");
      row += v;
      col[j] += v;
    }
    if (std::abs(row - 1.0) > kDiscreteTolerance)
      throw InvalidDistribution("DoublyStochasticOp: row " + std::to_string(i) + " sums to " +
                                std::to_string(row));
  }
  for (std::size_t j = 0; j < n_; ++j) {
    if (std::abs(col[j] - 1.0) > kDiscreteTolerance)
      throw InvalidDistribution("DoublyStochasticOp: column " + std::to_string(j) + " sums to " +
                                std::to_string(col[j]));
  }
}

DoublyStochasticOp DoublyStochasticOp::identity(std::size_t n) {
  std::vector<double> t(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return DoublyStochasticOp(n, std::move(t));
}

DoublyStochasticOp DoublyStochasticOp::complete_mixing(std::size_t n) {
  return DoublyStochasticOp(n, std::vector<double>(n * n, 1.0 / static_cast<double>(n)));
}

DoublyStochasticOp DoublyStochasticOp::from_permutations(
    const std::vector<std::vector<std::size_t>>& perms, std::span<const double> weights) {
  if (perms.empty() || perms.size() != weights.size())
    throw DimensionMismatch("from_permutations: need one weight per permutation");
  const std::size_t n = perms.front().size();
  const double total = numeric::stable_sum(weights);
  std::vector<double> t(n * n, 0.0);
  for (std::size_t k = 0; k < perms.size(); ++k) {
    if (perms[k].size() != n) throw DimensionMismatch("from_permutations: ragged permutations");
    if (weights[k] < 0.0) throw InvalidDistribution("from_permutations: negative weight");
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = perms[k][i];
      if (j >= n || seen[j]) throw InvalidDistribution("from_permutations: not a permutation");
      seen[j] = true;
      t[j * n + i] += weights[k] / total;
    }
  }
  return DoublyStochasticOp(n, std::move(t));
}

// ---------------------------------------------------------------------------

double shannon_entropy(const ProbVector& p) {
  std::vector<double> terms;
  terms.reserve(p.size());
  for (double x : p) terms.push_back(-plog2p(x));
  return std::max(0.0, numeric::stable_sum(terms));
}

double relative_entropy(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw DimensionMismatch("relative_entropy: length mismatch");
  std::vector<double> terms;
  terms.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    terms.push_back(p[i] * std::log2(p[i] / q[i]));
  }
  return std::max(0.0, numeric::stable_sum(terms));
}

double joint_entropy(const ProbMatrix& p) { return shannon_entropy(p.flatten()); }

double conditional_entropy(const ProbMatrix& p, Axis condition_on) {
  const ProbVector cond = condition_on == Axis::B ? p.marginal_b() : p.marginal_a();
  std::vector<double> terms;
  terms.reserve(p.values().size());
  for (std::size_t m = 0; m < p.rows(); ++m) {
    for (std::size_t n = 0; n < p.cols(); ++n) {
      const double pj = p(m, n);
      if (pj == 0.0) continue;
      const double pc = condition_on == Axis::B ? cond[n] : cond[m];
      terms.push_back(pj * std::log2(pc / pj));
    }
  }
  return std::max(0.0, numeric::stable_sum(terms));
}

double mutual_information(const ProbMatrix& p) {
  const ProbVector a = p.marginal_a();
  const ProbVector b = p.marginal_b();
  std::vector<double> terms;
  terms.reserve(p.values().size());
  for (std::size_t m = 0; m < p.rows(); ++m) {
    for (std::size_t n = 0; n < p.cols(); ++n) {
      const double pj = p(m, n);
      if (pj == 0.0) continue;
      terms.push_back(pj * std::log2(pj / (a[m] * b[n])));
    }
  }
  return std::max(0.0, numeric::stable_sum(terms));
}

MajorizationResult majorization(const ProbVector& p, const ProbVector& q) {
  const std::size_t n = std::max(p.size(), q.size());
  const auto sp = sorted_descending(p.values(), n);
  const auto sq = sorted_descending(q.values(), n);
  double cp = 0.0, cq = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    cp += sp[k];
    cq += sq[k];
    margin = std::min(margin, cp - cq);
  }
  return {margin >= -kMajorizationSlack, margin};
}

bool majorizes(const ProbVector& p, const ProbVector& q) { return majorization(p, q).verdict; }

ProbVector apply_doubly_stochastic(const ProbVector& p, const DoublyStochasticOp& t) {
  if (p.size() != t.size()) throw DimensionMismatch("apply_doubly_stochastic: size mismatch");
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) out[i] += t(i, j) * p[j];
  return ProbVector::normalize(std::move(out));
}

ProbMatrix apply_doubly_stochastic(const ProbMatrix& p, const DoublyStochasticOp& t_a,
                                   const DoublyStochasticOp& t_b) {
  if (p.rows() != t_a.size() || p.cols() != t_b.size())
    throw DimensionMismatch("apply_doubly_stochastic: size mismatch");
  const std::size_t r = p.rows(), c = p.cols();
  std::vector<double> tmp(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < r; ++k) {
      const double w = t_a(i, k);
      if (w == 0.0) continue;
      for (std::size_t n = 0; n < c; ++n) tmp[i * c + n] += w * p(k, n);
    }
  std::vector<double> out(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t n = 0; n < c; ++n) acc += t_b(j, n) * tmp[i * c + n];
      out[i * c + j] = acc;
    }
  return ProbMatrix::normalize(r, c, std::move(out));
}

double continuous_entropy(const Grid1D& g) {
  std::vector<double> terms;
  terms.reserve(g.size());
  for (double v : g.values()) terms.push_back(-plog2p(v));
  return g.step() * numeric::stable_sum(terms);
}

double continuous_entropy(const Grid2D& g) {
  std::vector<double> terms;
  terms.reserve(g.values().size());
  for (double v : g.values()) terms.push_back(-plog2p(v));
  return g.step_a() * g.step_b() * numeric::stable_sum(terms);
}

std::vector<DominancePoint> dominance_curve(const Grid1D& g) {
  const auto sorted = sorted_descending(g.values(), g.size());
  std::vector<DominancePoint> curve;
  curve.reserve(sorted.size() + 1);
  curve.push_back({0.0, 0.0});
  double acc = 0.0, comp = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    // Kahan step keeps the terminal value at 1 to ~1e-15.
    const double y = sorted[k] * g.step() - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
    curve.push_back({static_cast<double>(k + 1) * g.step(), acc});
  }
  return curve;
}

}  // namespace entrocert
