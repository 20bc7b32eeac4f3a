#pragma once

// Discrete and gridded probability containers, base-2 entropies and
// majorization tests.
//
// Every entropy here is in bits. Continuous entropies are taken relative to
// the units of the grid axis (seconds, rad/s), so negative values are normal.

#include <cstddef>
#include <span>
#include <vector>

namespace entrocert {

inline constexpr double kDiscreteTolerance = 1e-12;
inline constexpr double kGridTolerance = 1e-9;
inline constexpr double kMajorizationSlack = 1e-12;

/// Probability vector: non-negative, sums to one within kDiscreteTolerance.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> p);

  /// Divides non-negative weights by their sum. Throws on negative entries
  /// or a zero total.
  static ProbVector normalize(std::vector<double> weights);
  static ProbVector uniform(std::size_t n);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  auto begin() const noexcept { return p_.begin(); }
  auto end() const noexcept { return p_.end(); }

 private:
  std::vector<double> p_;
};

/// Joint distribution over (A index m, B index n), row-major with rows = A.
class ProbMatrix {
 public:
  ProbMatrix() = default;
  ProbMatrix(std::size_t rows, std::size_t cols, std::vector<double> p);

  static ProbMatrix normalize(std::size_t rows, std::size_t cols, std::vector<double> weights);
  static ProbMatrix product(const ProbVector& a, const ProbVector& b);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t m, std::size_t n) const { return p_[m * cols_ + n]; }
  std::span<const double> values() const noexcept { return p_; }

  ProbVector marginal_a() const;
  ProbVector marginal_b() const;
  /// All cells as one flat distribution (for joint entropies).
  ProbVector flatten() const { return ProbVector(p_); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> p_;
};

/// Uniformly sampled density on one axis. Node i sits at start + i*step and
/// represents the cell [x_i - step/2, x_i + step/2).
class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(double start, double step, std::vector<double> values);

  /// Rescales non-negative samples so that step * sum = 1.
  static Grid1D normalized(double start, double step, std::vector<double> values);

  double start() const noexcept { return start_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return values_.size(); }
  double node(std::size_t i) const noexcept { return start_ + static_cast<double>(i) * step_; }
  double cell_lo(std::size_t i) const noexcept { return node(i) - 0.5 * step_; }
  double lower_edge() const noexcept { return start_ - 0.5 * step_; }
  double upper_edge() const noexcept { return lower_edge() + static_cast<double>(size()) * step_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  double start_ = 0.0;
  double step_ = 1.0;
  std::vector<double> values_;
};

/// Uniformly sampled joint density; values row-major with rows along axis A.
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(double start_a, double step_a, std::size_t count_a, double start_b, double step_b,
         std::size_t count_b, std::vector<double> values);

  static Grid2D normalized(double start_a, double step_a, std::size_t count_a, double start_b,
                           double step_b, std::size_t count_b, std::vector<double> values);

  double start_a() const noexcept { return start_a_; }
  double step_a() const noexcept { return step_a_; }
  std::size_t count_a() const noexcept { return count_a_; }
  double start_b() const noexcept { return start_b_; }
  double step_b() const noexcept { return step_b_; }
  std::size_t count_b() const noexcept { return count_b_; }
  double node_a(std::size_t i) const noexcept { return start_a_ + static_cast<double>(i) * step_a_; }
  double node_b(std::size_t j) const noexcept { return start_b_ + static_cast<double>(j) * step_b_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * count_b_ + j]; }
  std::span<const double> values() const noexcept { return values_; }

  Grid1D marginal_a() const;
  Grid1D marginal_b() const;

 private:
  double start_a_ = 0.0;
  double step_a_ = 1.0;
  std::size_t count_a_ = 0;
  double start_b_ = 0.0;
  double step_b_ = 1.0;
  std::size_t count_b_ = 0;
  std::vector<double> values_;
};

/// Square matrix whose rows and columns each sum to one. Acts on column
/// vectors: (T p)_i = sum_j T_ij p_j.
class DoublyStochasticOp {
 public:
  DoublyStochasticOp() = default;
  DoublyStochasticOp(std::size_t n, std::vector<double> t);

  static DoublyStochasticOp identity(std::size_t n);
  static DoublyStochasticOp complete_mixing(std::size_t n);
  /// Convex combination of permutation matrices; perms[k][i] = image of i.
  static DoublyStochasticOp from_permutations(const std::vector<std::vector<std::size_t>>& perms,
                                              std::span<const double> weights);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return t_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> t_;
};

enum class Axis { A, B };

double shannon_entropy(const ProbVector& p);

/// D(p||q) in bits. Returns +infinity when p has mass where q has none.
double relative_entropy(const ProbVector& p, const ProbVector& q);

double joint_entropy(const ProbMatrix& p);

/// H(other | condition_on). With condition_on = B this is H(A|B) = H(A,B) - H(B).
double conditional_entropy(const ProbMatrix& p, Axis condition_on = Axis::B);

/// D(joint || marginal_a x marginal_b).
double mutual_information(const ProbMatrix& p);

struct MajorizationResult {
  bool verdict = false;
  /// min over k of (sum of k largest of p) - (sum of k largest of q).
  double margin = 0.0;
};

/// Partial-sum dominance test of p over q. Shorter input is zero padded.
MajorizationResult majorization(const ProbVector& p, const ProbVector& q);
bool majorizes(const ProbVector& p, const ProbVector& q);

ProbVector apply_doubly_stochastic(const ProbVector& p, const DoublyStochasticOp& t);
/// (T_a x T_b) applied to a joint distribution.
ProbMatrix apply_doubly_stochastic(const ProbMatrix& p, const DoublyStochasticOp& t_a,
                                   const DoublyStochasticOp& t_b);

/// Riemann entropy -sum rho log2(rho) * step; exact for piecewise-constant
/// densities aligned with the cells.
double continuous_entropy(const Grid1D& g);
double continuous_entropy(const Grid2D& g);

struct DominancePoint {
  double measure = 0.0;  ///< s, same units as the axis
  double mass = 0.0;     ///< integral of the density over its largest values of measure s
};

/// Decreasing-rearrangement partial integrals, starting at (0, 0) and
/// ending at (support, 1).
std::vector<DominancePoint> dominance_curve(const Grid1D& g);

}  // namespace entrocert
