#pragma once

// Count data: coincidence histograms and filter-pair tables, background
// subtraction, seeded campaign simulation with shot noise and filter
// jitter, and Poisson bootstrap of the witness margin.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "entrocert/coarsegrain.hpp"
#include "entrocert/filters.hpp"
#include "entrocert/witness.hpp"

namespace entrocert {

struct CoincidenceHistogram {
  double bin_width_s = 1e-12;
  double t0_s = 0.0;             ///< start of bin 0
  std::vector<double> counts;    ///< integers as read; fractional after background subtraction
  double background_per_bin = 0.0;

  double total() const;
};

/// Filter-pair counts, row-major over (m, n).
struct JointCounts {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> counts;

  double total() const;
  double operator()(std::size_t m, std::size_t n) const { return counts[m * cols + n]; }
  ProbMatrix probabilities() const;
};

/// Lines starting with '#' are carried as comments and skipped on load.
CoincidenceHistogram load_histogram(const std::filesystem::path& path);
void save_histogram(const CoincidenceHistogram& h, const std::filesystem::path& path,
                    const std::vector<std::string>& comments = {});
JointCounts load_joint_counts(const std::filesystem::path& path);
void save_joint_counts(const JointCounts& c, const std::filesystem::path& path,
                       const std::vector<std::string>& comments = {});

/// Estimates a uniform accidental floor from the outer `wing_fraction` of
/// bins on each side and subtracts it, clamping at zero.
CoincidenceHistogram subtract_background(const CoincidenceHistogram& h, double wing_fraction);

/// H(T) + log2(bin width in seconds), kind diff_variable.
EntropyBound timing_entropy_bound(const CoincidenceHistogram& h);

/// Expected histogram of a centered Gaussian timing difference: each bin
/// holds pairs * (bin mass) + background, unrounded. Bin centers sit on
/// multiples of the bin width.
CoincidenceHistogram expected_histogram(double sigma_s, double bin_width_s, double pairs,
                                        double background_per_bin = 0.0,
                                        double half_width_sigmas = 8.0);

struct JitterModel {
  double max_shift_fwhm = 0.0;    ///< center offset drawn from U(-d, d) in FWHM units
  double max_width_excess = 0.0;  ///< width factor 1 + e with e drawn from U(0, e_max)
};

/// `f` moved by shift_fwhm * FWHM and widened by (1 + width_excess).
FilterProfile jittered(const FilterProfile& f, double shift_fwhm, double width_excess);

struct CampaignConfig {
  std::uint64_t total_pairs = 0;
  FilterBank bank_a;
  FilterBank bank_b;
  JitterModel jitter_a;
  JitterModel jitter_b;
  std::uint64_t rng_seed = 0;
  double background_per_cell = 0.0;  ///< mean accidentals per filter pair
  bool noiseless = false;            ///< report expected counts instead of Poisson draws
  double timing_sigma_s = 0.0;       ///< 0 skips the histogram
  double timebin_s = 1e-12;
  std::uint64_t timing_pairs = 0;    ///< 0 means total_pairs
  double timing_background_per_bin = 0.0;
  SampleOptions sampling;
};

struct CampaignResult {
  JointCounts counts;
  CoarseGrained2D expected;
  FilterBank realized_a;
  FilterBank realized_b;
  CoincidenceHistogram histogram;
  std::string rng_algorithm;
};

inline constexpr const char* kRngAlgorithm =
    "mt19937_64 per stream; stream seed = splitmix64(seed ^ splitmix64(stream id)); "
    "std::poisson_distribution (libstdc++)";

/// Deterministic stream seed for (seed, stream id).
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream);

CampaignResult simulate_campaign(const Grid2D& rho, const CampaignConfig& cfg);

/// Everything needed to turn count data into a witness margin.
struct PipelineSpec {
  double bin_width_a = 1.0;
  double bin_width_b = 1.0;
  double w0 = 1.0;
  bool freq_precondition = false;
  Inequality inequality = Inequality::Conditional;
  double wing_fraction = 0.0;  ///< 0 disables background subtraction
};

struct PipelineResult {
  EntropyBound time;
  EntropyBound freq;
  WitnessReport report;
  CoincidenceHistogram histogram;  ///< after background subtraction
};

PipelineResult run_pipeline(const PipelineSpec& spec, const JointCounts& counts,
                            const CoincidenceHistogram& histogram);

struct BootstrapResult {
  double margin_point = 0.0;
  double margin_mean = 0.0;
  double ci_low = 0.0;   ///< 2.5th percentile
  double ci_high = 0.0;  ///< 97.5th percentile
  std::size_t resamples = 0;
  std::size_t failed_resamples = 0;  ///< counted as -infinity margins
  std::uint64_t seed = 0;
  std::string rng_algorithm;
};

/// Poisson-resamples every count cell and histogram bin, reruns the
/// pipeline, and summarizes the margin distribution.
BootstrapResult bootstrap_margin(const PipelineSpec& spec, const JointCounts& counts,
                                 const CoincidenceHistogram& histogram, std::size_t n_resamples,
                                 std::uint64_t seed);

}  // namespace entrocert
