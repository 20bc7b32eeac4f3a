#pragma once

// Coarse graining of continuous densities into discrete measurement
// probabilities, and the continuous-entropy upper bounds derived from them:
// top-hat binning, fixed filter banks, and drifting banks with a w0 weight.

#include <cstddef>
#include <string>
#include <vector>

#include "entrocert/filters.hpp"
#include "entrocert/probcore.hpp"

namespace entrocert {

struct CoarseGrained1D {
  ProbVector probs;
  double bin_width = 1.0;
  double axis_origin = 0.0;  ///< center of bin 0
  /// Continuous extent of one outcome in bin-width units. 1 for directly
  /// binned data; 2 for sum/difference indices built from a rectangular
  /// 2D grid, where each index covers a diagonal band two bins wide.
  double straddle = 1.0;
};

struct CoarseGrained2D {
  ProbMatrix probs;
  double bin_width_a = 1.0;
  double bin_width_b = 1.0;
  double origin_a = 0.0;  ///< center of row 0
  double origin_b = 0.0;  ///< center of column 0
  double coverage = 1.0;  ///< density mass inside the banks' span
  std::vector<std::string> warnings;
};

enum class BoundKind { Joint, Conditional, Marginal, SumVariable, DiffVariable };

std::string to_string(BoundKind kind);
BoundKind bound_kind_from_string(const std::string& name);

struct EntropyBound {
  double value_bits = 0.0;
  BoundKind kind = BoundKind::Marginal;
  double correction_w0 = 1.0;
  /// False when a majorization precondition failed or was not attested.
  bool valid = false;
  std::string provenance;
};

/// Bins a piecewise-constant density into consecutive bins of `width`
/// starting at the grid's lower edge. Bin masses are exact overlap integrals,
/// so widths need not be a multiple of the grid step.
CoarseGrained1D tophat_bin(const Grid1D& g, double width);
CoarseGrained2D tophat_bin(const Grid2D& g, double width_a, double width_b);

struct SampleOptions {
  double coverage_error = 0.99;    ///< below this the sampling is refused
  double coverage_warn = 0.999;    ///< below this a warning is attached
  double min_points_per_width = 20.0;
};

/// P(m, n) proportional to the double integral of rho(wA, wB) f_m(wA) f_n(wB).
/// Filter responses are integrated exactly over each grid cell.
CoarseGrained2D filter_sample_joint(const Grid2D& rho, const FilterBank& bank_a,
                                    const FilterBank& bank_b, const SampleOptions& options = {});

/// Same for one axis.
CoarseGrained1D filter_sample(const Grid1D& rho, const FilterBank& bank,
                              const SampleOptions& options = {});

/// H(other | condition_on) / w0 + log2(bin width of the other axis).
/// `precondition_met` attests the majorization evidence (fixed-bank check
/// or bank weights) and becomes the bound's `valid` flag.
EntropyBound conditional_entropy_bound(const CoarseGrained2D& cg, double w0, bool precondition_met,
                                       Axis condition_on = Axis::B);

/// H(A, B) + log2(dA dB).
EntropyBound joint_entropy_bound(const CoarseGrained2D& cg, bool precondition_met);

/// H + log2(straddle * width), tagged with `kind`.
EntropyBound entropy_bound(const CoarseGrained1D& cg, BoundKind kind, bool precondition_met);

/// Distribution of k = m + n. Requires equal bin widths.
CoarseGrained1D sum_variable_distribution(const CoarseGrained2D& cg);
/// Distribution of m - n, indexed k = m - n + cols - 1. Requires equal bin widths.
CoarseGrained1D diff_variable_distribution(const CoarseGrained2D& cg);

struct BankCheck {
  bool all_majorized = true;
  double min_margin = 0.0;           ///< 1/spacing - peak, worst filter
  std::size_t worst_index = 0;
  std::vector<TopHatCheck> per_filter;
};

/// Fixed-bank precondition: every filter majorized by the nominal top-hat.
BankCheck check_bank(const FilterBank& bank);

struct ConvergenceStep {
  double spacing_a = 0.0;
  double spacing_b = 0.0;
  double bound_bits = 0.0;
  bool majorization_ok = false;
  double margin = 0.0;  ///< worst top-hat margin over both banks, scaled by spacing
};

struct BankPair {
  FilterBank a;
  FilterBank b;
};

/// Conditional bound at each resolution of a bank family. Steps failing the
/// top-hat check are reported with majorization_ok = false.
std::vector<ConvergenceStep> refine_convergence_report(const Grid2D& rho,
                                                       const std::vector<BankPair>& family,
                                                       Axis condition_on = Axis::B,
                                                       const SampleOptions& options = {});

}  // namespace entrocert
