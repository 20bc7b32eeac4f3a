#include "entrocert/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "entrocert/errors.hpp"
#include "entrocert/io.hpp"
#include "entrocert/numeric.hpp"
#include "entrocert/parallel.hpp"

namespace entrocert {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamBankA = 1;
constexpr std::uint64_t kStreamBankB = 2;
constexpr std::uint64_t kStreamCells = 3;
constexpr std::uint64_t kStreamHistogram = 4;
constexpr std::uint64_t kStreamBootstrap = 5;

std::uint64_t stream_id(std::uint64_t tag, std::uint64_t index) { return (tag << 40) | index; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double poisson_draw(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0.0;
  std::poisson_distribution<long long> d(mean);
  return static_cast<double>(d(rng));
}

std::string header_comments(const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  return s;
}

// Value of a "# key: value" comment line, if present.
bool comment_value(const std::string& text, const std::string& key, double& out) {
  const std::string tag = "# " + key + ":";
  std::size_t pos = 0;
  while ((pos = text.find(tag, pos)) != std::string::npos) {
    if (pos == 0 || text[pos - 1] == '\n') {
      const auto end = text.find('\n', pos);
      const std::string v = text.substr(pos + tag.size(), end == std::string::npos ? std::string::npos : end - pos - tag.size());
      try {
        out = std::stod(v);
        return true;
      } catch (const std::exception&) {
        throw SchemaError("malformed '" + key + "' comment");
      }
    }
    pos += tag.size();
  }
  return false;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double f = pos - static_cast<double>(i);
  if (f == 0.0) return sorted[i];
  return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

double CoincidenceHistogram::total() const { return numeric::stable_sum(counts); }

double JointCounts::total() const { return numeric::stable_sum(counts); }

ProbMatrix JointCounts::probabilities() const {
  if (rows == 0 || cols == 0 || counts.size() != rows * cols)
    throw DimensionMismatch("joint counts table is empty or malformed");
  if (!(total() > 0.0)) throw InvalidDistribution("joint counts table has no counts");
  return ProbMatrix::normalize(rows, cols, counts);
}

CoincidenceHistogram load_histogram(const fs::path& path) {
  const std::string text = read_text(path);
  const auto t = parse_numeric_csv(text, {"bin_start_ps", "counts"}, path.string());
  if (t.rows.size() < 2) throw SchemaError(path.string() + ": a histogram needs at least 2 bins");
  const double first = t.rows.front()[0];
  const double step = (t.rows.back()[0] - first) / static_cast<double>(t.rows.size() - 1);
  if (!(step > 0.0)) throw SchemaError(path.string() + ": bin starts must increase", t.lines[1]);
  CoincidenceHistogram h;
  h.counts.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double expect = first + static_cast<double>(i) * step;
    if (std::abs(t.rows[i][0] - expect) > 1e-6 * step)
      throw SchemaError(path.string() + ": bin starts must be uniformly spaced", t.lines[i]);
    if (t.rows[i][1] < 0.0) throw SchemaError(path.string() + ": negative count", t.lines[i]);
    h.counts.push_back(t.rows[i][1]);
  }
  h.bin_width_s = step * 1e-12;
  h.t0_s = first * 1e-12;
  comment_value(text, "background_per_bin", h.background_per_bin);
  return h;
}

void save_histogram(const CoincidenceHistogram& h, const fs::path& path,
                    const std::vector<std::string>& comments) {
  std::string s = header_comments(comments);
  s += "# background_per_bin: " + format_double(h.background_per_bin) + "\n";
  s += "bin_start_ps,counts\n";
  const double t0 = h.t0_s * 1e12, w = h.bin_width_s * 1e12;
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    s += format_double(t0 + static_cast<double>(i) * w) + "," + format_double(h.counts[i]) + "\n";
  write_text(path, s);
}

JointCounts load_joint_counts(const fs::path& path) {
  const auto t = read_numeric_csv(path, {"m_index", "n_index", "counts"});
  if (t.rows.empty()) throw SchemaError(path.string() + ": no count rows");
  JointCounts c;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r[0] < 0 || r[1] < 0 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1]))
      throw SchemaError(path.string() + ": indices must be non-negative integers", t.lines[i]);
    if (r[2] < 0.0) throw SchemaError(path.string() + ": negative count", t.lines[i]);
    c.rows = std::max(c.rows, static_cast<std::size_t>(r[0]) + 1);
    c.cols = std::max(c.cols, static_cast<std::size_t>(r[1]) + 1);
  }
  c.counts.assign(c.rows * c.cols, 0.0);
  std::vector<char> seen(c.rows * c.cols, 0);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto k = static_cast<std::size_t>(t.rows[i][0]) * c.cols + static_cast<std::size_t>(t.rows[i][1]);
    if (seen[k]) throw SchemaError(path.string() + ": duplicate (m_index, n_index) pair", t.lines[i]);
    seen[k] = 1;
    c.counts[k] = t.rows[i][2];
  }
  return c;
}

void save_joint_counts(const JointCounts& c, const fs::path& path, const std::vector<std::string>& comments) {
  std::string s = header_comments(comments);
  s += "m_index,n_index,counts\n";
  for (std::size_t m = 0; m < c.rows; ++m)
    for (std::size_t n = 0; n < c.cols; ++n)
      s += std::to_string(m) + "," + std::to_string(n) + "," + format_double(c(m, n)) + "\n";
  write_text(path, s);
}

CoincidenceHistogram subtract_background(const CoincidenceHistogram& h, double wing_fraction) {
  if (!(wing_fraction > 0.0) || wing_fraction > 0.4)
    throw ConfigError("background wing fraction must lie in (0, 0.4]");
  const std::size_t n = h.counts.size();
  const auto wing = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(wing_fraction * static_cast<double>(n))));
  if (2 * wing >= n) throw ConfigError("histogram too short for the requested background wings");
  double acc = 0.0;
  for (std::size_t i = 0; i < wing; ++i) acc += h.counts[i] + h.counts[n - 1 - i];
  const double bg = acc / static_cast<double>(2 * wing);
  const auto [lo, hi] = std::minmax_element(h.counts.begin(), h.counts.end());
  const bool flat = *hi - *lo <= 1e-12 * std::abs(*hi);
  if (!flat && bg > 0.1 * *hi) {
    std::ostringstream os;
    os << "background wings average " << bg << " counts, above 10% of the peak (" << *hi
       << "); the coincidence peak likely extends into the wings";
    throw ConfigError(os.str());
  }
  CoincidenceHistogram out = h;
  for (double& c : out.counts) c = std::max(c - bg, 0.0);
  out.background_per_bin = h.background_per_bin + bg;
  return out;
}

EntropyBound timing_entropy_bound(const CoincidenceHistogram& h) {
  if (!(h.bin_width_s > 0.0)) throw ConfigError("histogram bin width must be positive");
  if (h.counts.empty() || !(h.total() > 0.0)) throw InvalidDistribution("histogram has no counts");
  const ProbVector p = ProbVector::normalize(h.counts);
  const double entropy = shannon_entropy(p);
  EntropyBound b;
  b.kind = BoundKind::DiffVariable;
  b.value_bits = entropy + std::log2(h.bin_width_s);
  b.valid = true;
  std::ostringstream os;
  os.precision(12);
  os << "H(T)=" << entropy << " bits over " << h.counts.size() << " bins; bin width=" << h.bin_width_s
     << " s; background per bin=" << h.background_per_bin;
  b.provenance = os.str();
  return b;
}

CoincidenceHistogram expected_histogram(double sigma_s, double bin_width_s, double pairs,
                                        double background_per_bin, double half_width_sigmas) {
  if (!(sigma_s > 0.0) || !(bin_width_s > 0.0)) throw ConfigError("timing sigma and bin width must be positive");
  if (!(pairs >= 0.0) || !(background_per_bin >= 0.0)) throw ConfigError("counts must be non-negative");
  const auto half = static_cast<std::size_t>(std::ceil(half_width_sigmas * sigma_s / bin_width_s));
  CoincidenceHistogram h;
  h.bin_width_s = bin_width_s;
  h.t0_s = -(static_cast<double>(half) + 0.5) * bin_width_s;
  h.counts.resize(2 * half + 1);
  const double scale = 1.0 / (sigma_s * std::sqrt(2.0));
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double lo = h.t0_s + static_cast<double>(i) * bin_width_s;
    const double a = lo * scale, b = (lo + bin_width_s) * scale;
    const double mass = a >= 0.0 ? 0.5 * (std::erfc(a) - std::erfc(b))
                        : b <= 0.0 ? 0.5 * (std::erfc(-b) - std::erfc(-a))
                                   : 0.5 * (std::erf(b) - std::erf(a));
    h.counts[i] = pairs * mass + background_per_bin;
  }
  return h;
}

FilterProfile jittered(const FilterProfile& f, double shift_fwhm, double width_excess) {
  if (!(width_excess > -1.0)) throw ConfigError("width excess must exceed -1");
  const double scale = 1.0 + width_excess;
  const double shift = shift_fwhm * f.width();
  const double c = f.center() + shift;
  const auto& s = f.shape();
  if (const auto* t = std::get_if<TopHat>(&s)) return FilterProfile::top_hat(t->width * scale, c);
  if (const auto* l = std::get_if<Lorentzian>(&s)) return FilterProfile::lorentzian(l->fwhm * scale, c);
  if (const auto* g = std::get_if<Gaussian>(&s)) return FilterProfile::gaussian(g->sigma * scale, c);
  if (const auto* v = std::get_if<Voigt>(&s))
    return FilterProfile::voigt(v->fwhm_lorentz * scale, v->sigma_gauss * scale, c);
  if (width_excess != 0.0) throw Unsupported("width jitter needs an analytic profile: " + f.describe());
  return f.with_center(c);
}

namespace {

FilterBank realize_bank(const FilterBank& bank, const JitterModel& jitter, std::uint64_t seed,
                        std::uint64_t tag) {
  if (!(jitter.max_shift_fwhm >= 0.0) || !(jitter.max_width_excess >= 0.0))
    throw ConfigError("jitter magnitudes must be non-negative");
  if (jitter.max_shift_fwhm == 0.0 && jitter.max_width_excess == 0.0) return bank;
  std::vector<FilterProfile> profiles;
  profiles.reserve(bank.size());
  for (std::size_t n = 0; n < bank.size(); ++n) {
    std::mt19937_64 rng(derive_stream_seed(seed, stream_id(tag, n)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double delta = jitter.max_shift_fwhm * (2.0 * unit(rng) - 1.0);
    const double eps = jitter.max_width_excess * unit(rng);
    profiles.push_back(jittered(bank[n], delta, eps));
  }
  return FilterBank(std::move(profiles), bank.nominal_spacing(), bank.nominal_centers());
}

}  // namespace

CampaignResult simulate_campaign(const Grid2D& rho, const CampaignConfig& cfg) {
  if (cfg.total_pairs == 0) throw ConfigError("total_pairs must be positive");
  if (!(cfg.background_per_cell >= 0.0) || !(cfg.timing_background_per_bin >= 0.0))
    throw ConfigError("background rates must be non-negative");
  CampaignResult r;
  r.rng_algorithm = kRngAlgorithm;
  r.realized_a = realize_bank(cfg.bank_a, cfg.jitter_a, cfg.rng_seed, kStreamBankA);
  r.realized_b = realize_bank(cfg.bank_b, cfg.jitter_b, cfg.rng_seed, kStreamBankB);
  r.expected = filter_sample_joint(rho, r.realized_a, r.realized_b, cfg.sampling);

  const auto& p = r.expected.probs;
  r.counts.rows = p.rows();
  r.counts.cols = p.cols();
  r.counts.counts.resize(p.rows() * p.cols());
  const double n_pairs = static_cast<double>(cfg.total_pairs);
  parallel_for(r.counts.counts.size(), [&](std::size_t k) {
    const double mean = n_pairs * p.values()[k] + cfg.background_per_cell;
    if (cfg.noiseless) {
      r.counts.counts[k] = mean;
      return;
    }
    std::mt19937_64 rng(derive_stream_seed(cfg.rng_seed, stream_id(kStreamCells, k)));
    r.counts.counts[k] = poisson_draw(rng, mean);
  });

  if (cfg.timing_sigma_s > 0.0) {
    const double pairs = static_cast<double>(cfg.timing_pairs ? cfg.timing_pairs : cfg.total_pairs);
    r.histogram = expected_histogram(cfg.timing_sigma_s, cfg.timebin_s, pairs, cfg.timing_background_per_bin);
    if (!cfg.noiseless) {
      parallel_for(r.histogram.counts.size(), [&](std::size_t k) {
        std::mt19937_64 rng(derive_stream_seed(cfg.rng_seed, stream_id(kStreamHistogram, k)));
        r.histogram.counts[k] = poisson_draw(rng, r.histogram.counts[k]);
      });
    }
  }
  return r;
}

PipelineResult run_pipeline(const PipelineSpec& spec, const JointCounts& counts,
                            const CoincidenceHistogram& histogram) {
  PipelineResult r;
  r.histogram = spec.wing_fraction > 0.0 ? subtract_background(histogram, spec.wing_fraction) : histogram;
  r.time = timing_entropy_bound(r.histogram);

  CoarseGrained2D cg;
  cg.probs = counts.probabilities();
  cg.bin_width_a = spec.bin_width_a;
  cg.bin_width_b = spec.bin_width_b;
  if (spec.inequality == Inequality::Conditional) {
    r.freq = conditional_entropy_bound(cg, spec.w0, spec.freq_precondition);
  } else {
    if (spec.w0 != 1.0)
      throw Unsupported("the w0 correction applies to conditional entropies only; use the conditional inequality");
    r.freq = entropy_bound(sum_variable_distribution(cg), BoundKind::SumVariable, spec.freq_precondition);
  }
  r.report = evaluate_witness(r.time, r.freq, spec.inequality);
  return r;
}

BootstrapResult bootstrap_margin(const PipelineSpec& spec, const JointCounts& counts,
                                 const CoincidenceHistogram& histogram, std::size_t n_resamples,
                                 std::uint64_t seed) {
  if (n_resamples < 100) throw ConfigError("bootstrap needs at least 100 resamples");
  BootstrapResult out;
  out.resamples = n_resamples;
  out.seed = seed;
  out.rng_algorithm = kRngAlgorithm;
  out.margin_point = run_pipeline(spec, counts, histogram).report.margin;

  std::vector<double> margins(n_resamples);
  std::vector<char> failed(n_resamples, 0);
  parallel_for(n_resamples, [&](std::size_t r) {
    std::mt19937_64 rng(derive_stream_seed(seed, stream_id(kStreamBootstrap, r)));
    JointCounts c = counts;
    for (double& v : c.counts) v = poisson_draw(rng, v);
    CoincidenceHistogram h = histogram;
    for (double& v : h.counts) v = poisson_draw(rng, v);
    try {
      margins[r] = run_pipeline(spec, c, h).report.margin;
    } catch (const Error&) {
      margins[r] = -std::numeric_limits<double>::infinity();
      failed[r] = 1;
    }
  });
  for (char f : failed) out.failed_resamples += static_cast<std::size_t>(f);
  out.margin_mean = out.failed_resamples ? -std::numeric_limits<double>::infinity()
                                         : numeric::stable_sum(margins) / static_cast<double>(n_resamples);
  std::sort(margins.begin(), margins.end());
  out.ci_low = percentile(margins, 0.025);
  out.ci_high = percentile(margins, 0.975);
  return out;
}

}  // namespace entrocert
