#include "entrocert/witness.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "entrocert/errors.hpp"
#include "entrocert/spdc.hpp"

namespace entrocert {

std::string to_string(Inequality q) { return q == Inequality::SumDiff ? "sum-diff" : "conditional"; }

Inequality inequality_from_string(const std::string& name) {
  if (name == "sum-diff" || name == "sum_diff") return Inequality::SumDiff;
  if (name == "conditional") return Inequality::Conditional;
  throw ConfigError("unknown inequality '" + name + "' (expected sum-diff or conditional)");
}

double witness_threshold(Inequality q) {
  const double pe = std::log2(std::numbers::pi * std::numbers::e);
  return q == Inequality::SumDiff ? pe + 1.0 : pe;
}

namespace {

bool time_kind_ok(BoundKind k, Inequality q) {
  if (q == Inequality::SumDiff) return k == BoundKind::DiffVariable;
  return k == BoundKind::Conditional || k == BoundKind::DiffVariable;
}

bool freq_kind_ok(BoundKind k, Inequality q) {
  if (q == Inequality::SumDiff) return k == BoundKind::SumVariable;
  return k == BoundKind::Conditional || k == BoundKind::SumVariable;
}

}  // namespace

WitnessReport evaluate_witness(const EntropyBound& h_time, const EntropyBound& h_freq, Inequality q) {
  if (!time_kind_ok(h_time.kind, q))
    throw KindMismatch("time bound of kind " + to_string(h_time.kind) + " cannot enter the " +
                       to_string(q) + " inequality");
  if (!freq_kind_ok(h_freq.kind, q))
    throw KindMismatch("frequency bound of kind " + to_string(h_freq.kind) + " cannot enter the " +
                       to_string(q) + " inequality");

  WitnessReport r;
  r.inequality = q;
  r.h_time_bound = h_time.value_bits;
  r.h_freq_bound = h_freq.value_bits;
  r.threshold = witness_threshold(q);
  r.margin = r.threshold - (r.h_time_bound + r.h_freq_bound);
  r.w0_used = std::min(h_time.correction_w0, h_freq.correction_w0);
  r.preconditions_met = h_time.valid && h_freq.valid;
  r.inputs_digest = {"time: " + h_time.provenance, "frequency: " + h_freq.provenance};

  if (!h_time.valid) r.reasons.emplace_back("time bound invalid: majorization precondition not met");
  if (!h_freq.valid) r.reasons.emplace_back("frequency bound invalid: majorization precondition not met");
  if (!std::isfinite(r.margin)) r.reasons.emplace_back("non-finite entropy bound");
  else if (!(r.margin > 0.0)) r.reasons.emplace_back("entropy sum does not fall strictly below the threshold");
  r.certified = r.reasons.empty();

  if (q == Inequality::Conditional) {
    if (h_time.kind == BoundKind::DiffVariable)
      r.notes.emplace_back("time arm uses h(tA - tB) as an upper bound on h(tA | tB)");
    if (h_freq.kind == BoundKind::SumVariable)
      r.notes.emplace_back("frequency arm uses h(wA + wB) as an upper bound on h(wA | wB)");
  }
  return r;
}

FrequencyBudget frequency_budget(double h_time_bound_bits, double center_wavelength_m, Inequality q) {
  if (!std::isfinite(h_time_bound_bits)) throw ConfigError("timing bound must be finite");
  FrequencyBudget b;
  b.max_h_freq_bits = witness_threshold(q) - h_time_bound_bits;
  b.max_sigma_rad_per_s = gaussian_sigma_for_entropy(b.max_h_freq_bits);
  b.max_fwhm_gauss_rad_per_s = fwhm_from_sigma(b.max_sigma_rad_per_s);
  b.max_fwhm_gauss_m = delta_lambda_from_delta_omega(b.max_fwhm_gauss_rad_per_s, center_wavelength_m);
  b.max_fwhm_lorentz_rad_per_s = lorentzian_fwhm_for_entropy(b.max_h_freq_bits);
  return b;
}

double grating_resolution(double grooves_per_mm, double beam_diameter_mm, double center_freq_hz) {
  if (!(grooves_per_mm > 0.0) || !(beam_diameter_mm > 0.0) || !(center_freq_hz > 0.0))
    throw ConfigError("grating parameters must be positive");
  return center_freq_hz / (grooves_per_mm * beam_diameter_mm);
}

double grating_beam_for_resolution(double grooves_per_mm, double target_linewidth_hz,
                                   double center_freq_hz) {
  if (!(grooves_per_mm > 0.0) || !(target_linewidth_hz > 0.0) || !(center_freq_hz > 0.0))
    throw ConfigError("grating parameters must be positive");
  return center_freq_hz / (target_linewidth_hz * grooves_per_mm);
}

EbitsBound ebits_lower_bound(double uncertainty_product) {
  if (!(uncertainty_product > 0.0) || !std::isfinite(uncertainty_product))
    throw ConfigError("uncertainty product must be positive");
  EbitsBound b;
  b.formula_footnote = std::max(0.0, -1.0 - std::log2(uncertainty_product));
  b.formula_e_based = std::max(0.0, -std::log2(std::numbers::e * uncertainty_product));
  if (uncertainty_product >= 1.0) {
    b.formula_footnote = 0.0;
    b.formula_e_based = 0.0;
  }
  const bool e_match = std::abs(b.formula_e_based - b.reported_value) < 0.005;
  const bool f_match = std::abs(b.formula_footnote - b.reported_value) < 0.005;
  b.matches_reported = e_match ? "formula_e_based" : (f_match ? "formula_footnote" : "none");
  std::ostringstream os;
  os.precision(4);
  os << "the two readings differ by " << std::abs(b.formula_footnote - b.formula_e_based)
     << " ebits; -log2(e x) reproduces the reported 2.546 at x = 0.063, -1 - log2(x) does not";
  b.note = os.str();
  return b;
}

}  // namespace entrocert
