#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>

#include "entrocert/acquisition.hpp"
#include "entrocert/coarsegrain.hpp"
#include "entrocert/errors.hpp"
#include "entrocert/filters.hpp"
#include "entrocert/io.hpp"
#include "entrocert/spdc.hpp"
#include "entrocert/witness.hpp"

namespace entrocert::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resamples;
  std::string inequality;
};

struct Config {
  json j;
  fs::path dir;
};

Config load_config(const std::string& path) {
  Config c;
  try {
    c.j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  if (!c.j.is_object()) throw ConfigError(path + ": top level must be a JSON object");
  c.dir = fs::path(path).parent_path();
  return c;
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

double number_req(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
  return number_or(j, key, 0.0);
}

std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
}

std::string string_or(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

bool bool_or(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(std::string("'") + key + "' must be true or false");
  return j.at(key).get<bool>();
}

fs::path path_req(const Config& c, const char* key) {
  const std::string p = string_or(c.j, key, "");
  if (p.empty()) throw ConfigError(std::string("missing path '") + key + "'");
  fs::path out = p;
  return out.is_relative() ? c.dir / out : out;
}

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(sde));
    } catch (const std::exception&) {
      throw ConfigError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Collects the run identity and every written file for manifest.json.
class Run {
 public:
  Run(std::string subcommand, fs::path out_dir) : subcommand_(std::move(subcommand)), out_(std::move(out_dir)) {}

  void add_input(const fs::path& p) { inputs_.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}}); }
  void set_config(json snapshot) { config_ = std::move(snapshot); }

  const std::string& id() {
    if (id_.empty()) {
      const json identity{{"subcommand", subcommand_}, {"tool_version", ENTROCERT_VERSION},
                          {"config", config_}, {"inputs", inputs_}};
      id_ = sha256_hex(identity.dump());
    }
    return id_;
  }

  fs::path path(const std::string& name) const { return out_ / name; }

  void write(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    outputs_.push_back(name);
  }
  void write_json(const std::string& name, json j) {
    j["run_id"] = id();
    write(name, j.dump(2) + "\n");
  }
  void record(const std::string& name) { outputs_.push_back(name); }

  void finish() {
    json outs = json::array();
    for (const auto& name : outputs_) outs.push_back({{"path", name}, {"sha256", sha256_file(path(name))}});
    const json manifest{{"subcommand", subcommand_}, {"tool_version", ENTROCERT_VERSION},
                        {"timestamp", timestamp()}, {"run_id", id()},
                        {"config", config_}, {"inputs", inputs_}, {"outputs", outs}};
    write_text(path("manifest.json"), manifest.dump(2) + "\n");
  }

  std::vector<std::string> csv_comments() { return {"run_id: " + id(), "tool: entrocert " ENTROCERT_VERSION}; }

 private:
  std::string subcommand_;
  fs::path out_;
  json config_ = json::object();
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::string id_;
};

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Majorization evidence for the frequency arm.

struct Evidence {
  bool met = false;
  double w0 = 1.0;
  std::string regime;
  std::vector<std::string> reasons;
  json detail = json::object();
};

json check_json(const BankCheck& c) {
  json margins = json::array();
  for (const auto& f : c.per_filter) margins.push_back(f.margin);
  return {{"all_majorized", c.all_majorized}, {"min_margin_per_rad_per_s", c.min_margin},
          {"worst_index", c.worst_index}, {"margins_per_rad_per_s", margins}};
}

Evidence frequency_evidence(const FilterBank& a, const FilterBank& b, const std::string& weights,
                            Inequality q, const WeightOptions& wopts) {
  Evidence ev;
  const bool uniform = a.uniform() && b.uniform();
  if (uniform) {
    ev.regime = "fixed";
    const BankCheck ca = check_bank(a), cb = check_bank(b);
    ev.detail["bank_a"] = check_json(ca);
    ev.detail["bank_b"] = check_json(cb);
    ev.met = ca.all_majorized && cb.all_majorized;
    if (!ca.all_majorized)
      ev.reasons.push_back("bank A filter " + std::to_string(ca.worst_index) +
                           " is not majorized by the top-hat of the nominal spacing");
    if (!cb.all_majorized)
      ev.reasons.push_back("bank B filter " + std::to_string(cb.worst_index) +
                           " is not majorized by the top-hat of the nominal spacing");
    ev.detail["regime"] = ev.regime;
    return ev;
  }

  ev.regime = "drifting";
  ev.detail["regime"] = ev.regime;
  if (weights == "none") {
    ev.reasons.emplace_back("filter banks drift or vary in shape and weights are disabled");
    return ev;
  }
  if (q == Inequality::SumDiff) {
    ev.reasons.emplace_back("drifting banks need the conditional inequality (the w0 correction applies to conditional entropies only)");
    return ev;
  }
  const auto ma = majorized_by_tophat(mean_filter(a), a.nominal_spacing());
  const auto mb = majorized_by_tophat(mean_filter(b), b.nominal_spacing());
  ev.detail["mean_filter_margin_a_per_rad_per_s"] = ma.margin;
  ev.detail["mean_filter_margin_b_per_rad_per_s"] = mb.margin;
  bool ok = ma.verdict && mb.verdict;
  if (!ma.verdict) ev.reasons.emplace_back("bank A mean filter is not majorized by the nominal top-hat");
  if (!mb.verdict) ev.reasons.emplace_back("bank B mean filter is not majorized by the nominal top-hat");
  double w0 = 1.0;
  for (const auto* bank : {&a, &b}) {
    const std::string tag = bank == &a ? "a" : "b";
    try {
      const WeightReport wr = bank_weights(*bank, wopts);
      ev.detail["w0_" + tag] = wr.w0;
      ev.detail["argmin_" + tag] = wr.argmin_index;
      ev.detail["weights_" + tag] = wr.per_filter_w;
      w0 *= wr.w0;
    } catch (const DegenerateRatio& e) {
      ok = false;
      ev.reasons.push_back("bank " + std::string(tag == "a" ? "A" : "B") + ": " + e.what());
    }
  }
  ev.met = ok;
  ev.w0 = ok ? w0 : 1.0;
  ev.detail["w0"] = ev.w0;
  return ev;
}

// ---------------------------------------------------------------------------

int cmd_certify(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(o.config);
  require_known_keys(cfg.j,
                     {"timing_histogram", "joint_counts", "bank_a", "bank_b", "inequality",
                      "background_wing_fraction", "weights", "resamples", "seed", "weight_window_fwhm", "run_id"},
                     "certify config");
  const auto hist_path = path_req(cfg, "timing_histogram");
  const auto counts_path = path_req(cfg, "joint_counts");
  const auto bank_a_path = path_req(cfg, "bank_a");
  const auto bank_b_path = path_req(cfg, "bank_b");
  const Inequality q = inequality_from_string(o.inequality.empty() ? string_or(cfg.j, "inequality", "conditional") : o.inequality);
  const double wing = number_or(cfg.j, "background_wing_fraction", 0.0);
  const std::string weights = string_or(cfg.j, "weights", "auto");
  if (weights != "auto" && weights != "none") throw ConfigError("'weights' must be \"auto\" or \"none\"");
  const std::size_t resamples = o.resamples ? *o.resamples : count_or(cfg.j, "resamples", 200);
  if (resamples != 0 && resamples < 100) throw ConfigError("resamples must be 0 or at least 100");
  const std::uint64_t seed = o.seed ? *o.seed : count_or(cfg.j, "seed", 0);
  WeightOptions wopts;
  wopts.window_widths = number_or(cfg.j, "weight_window_fwhm", wopts.window_widths);

  Run run("certify", o.out_dir);
  for (const auto& p : {hist_path, counts_path, bank_a_path, bank_b_path}) run.add_input(p);
  run.set_config({{"inequality", to_string(q)}, {"background_wing_fraction", wing}, {"weights", weights},
                  {"resamples", resamples}, {"seed", seed}, {"weight_window_fwhm", wopts.window_widths}});

  const CoincidenceHistogram hist = load_histogram(hist_path);
  const JointCounts counts = load_joint_counts(counts_path);
  const FilterBank bank_a = load_bank_manifest(bank_a_path);
  const FilterBank bank_b = load_bank_manifest(bank_b_path);
  if (counts.rows != bank_a.size() || counts.cols != bank_b.size()) {
    std::ostringstream os;
    os << "joint counts table is " << counts.rows << "x" << counts.cols << " but the banks hold "
       << bank_a.size() << " and " << bank_b.size() << " filters";
    throw ConfigError(os.str());
  }

  const Evidence ev = frequency_evidence(bank_a, bank_b, weights, q, wopts);
  PipelineSpec spec;
  spec.bin_width_a = bank_a.nominal_spacing();
  spec.bin_width_b = bank_b.nominal_spacing();
  spec.w0 = ev.w0;
  spec.freq_precondition = ev.met;
  spec.inequality = q;
  spec.wing_fraction = wing;
  PipelineResult pr = run_pipeline(spec, counts, hist);
  WitnessReport& report = pr.report;
  for (const auto& r : ev.reasons) report.reasons.push_back(r);
  report.inputs_digest.push_back("bank_a sha256 " + sha256_file(bank_a_path));
  report.inputs_digest.push_back("bank_b sha256 " + sha256_file(bank_b_path));
  report.inputs_digest.push_back("joint_counts sha256 " + sha256_file(counts_path));
  report.inputs_digest.push_back("timing_histogram sha256 " + sha256_file(hist_path));
  if (wing > 0.0)
    report.notes.emplace_back("uniform background estimated from histogram wings, subtracted and clamped at zero");

  std::vector<std::string> warnings;
  json boot = nullptr;
  if (resamples > 0) {
    const BootstrapResult b = bootstrap_margin(spec, counts, hist, resamples, seed);
    boot = {{"margin_point", b.margin_point}, {"margin_mean", std::isfinite(b.margin_mean) ? json(b.margin_mean) : json(nullptr)},
            {"ci95_low", std::isfinite(b.ci_low) ? json(b.ci_low) : json(nullptr)},
            {"ci95_high", std::isfinite(b.ci_high) ? json(b.ci_high) : json(nullptr)},
            {"resamples", b.resamples}, {"failed_resamples", b.failed_resamples}, {"seed", b.seed},
            {"rng", b.rng_algorithm}, {"ci_excludes_zero", b.ci_low > 0.0 || b.ci_high < 0.0}};
    if (std::isfinite(report.margin) && b.ci_high - b.ci_low > 0.1 * std::abs(report.margin))
      warnings.emplace_back("bootstrap CI width exceeds 10% of the margin; shot noise is significant");
    if (report.certified && !(b.ci_low > 0.0))
      warnings.emplace_back("point margin is positive but the 95% bootstrap CI reaches zero");
  }

  json rep{{"witness", to_json(report)},
           {"time_bound", to_json(pr.time)},
           {"freq_bound", to_json(pr.freq)},
           {"evidence", ev.detail},
           {"bootstrap", boot},
           {"warnings", warnings},
           {"background_per_bin", pr.histogram.background_per_bin},
           {"bin_width_a_rad_per_s", spec.bin_width_a},
           {"bin_width_b_rad_per_s", spec.bin_width_b},
           {"timebin_ps", hist.bin_width_s * 1e12}};

  std::ostringstream s;
  s << "entrocert certify\n";
  s << "inequality:      " << to_string(q) << " (threshold " << fixed(report.threshold) << " bits)\n";
  s << "time bound:      " << fixed(report.h_time_bound) << " bits (" << to_string(pr.time.kind) << ")\n";
  s << "frequency bound: " << fixed(report.h_freq_bound) << " bits (" << to_string(pr.freq.kind) << ", w0 "
    << fixed(ev.w0, 6) << ", " << ev.regime << " bank)\n";
  s << "margin:          " << fixed(report.margin) << " bits\n";
  if (!boot.is_null())
    s << "bootstrap 95% CI: [" << fixed(boot["ci95_low"].is_null() ? -INFINITY : boot["ci95_low"].get<double>()) << ", "
      << fixed(boot["ci95_high"].is_null() ? -INFINITY : boot["ci95_high"].get<double>()) << "] over " << resamples
      << " resamples\n";
  s << "preconditions:   " << (report.preconditions_met ? "met" : "NOT met") << "\n";
  s << "verdict:         " << (report.certified ? "CERTIFIED" : "NOT CERTIFIED") << "\n";
  for (const auto& r : report.reasons) s << "  reason: " << r << "\n";
  for (const auto& n : report.notes) s << "  note: " << n << "\n";
  for (const auto& w : warnings) s << "  warning: " << w << "\n";
  s << "run_id: " << run.id() << "\n";

  run.write_json("report.json", rep);
  run.write("summary.txt", s.str());
  run.finish();
  out << s.str();
  for (const auto& w : warnings) err << "warning: " << w << "\n";

  if (!report.preconditions_met) return kPreconditionsFailed;
  return report.certified ? kCertified : kNotCertified;
}

// ---------------------------------------------------------------------------

std::string profiles_csv(const FilterBank& bank, const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  s += "filter_index,omega_rad_per_s,density_per_rad_per_s\n";
  const double lo = bank.span_lo() - 2.0 * bank.nominal_spacing();
  const double hi = bank.span_hi() + 2.0 * bank.nominal_spacing();
  const std::size_t points = 801;
  for (std::size_t n = 0; n < bank.size(); ++n) {
    for (std::size_t i = 0; i < points; ++i) {
      const double w = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
      s += std::to_string(n) + "," + format_double(w) + "," + format_double(bank[n].evaluate(w)) + "\n";
    }
  }
  return s;
}

// Dominance curve of each filter sampled on +/- 50 widths, thinned for plotting.
std::string dominance_csv(const FilterBank& bank, const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  s += "filter_index,measure_rad_per_s,mass,tophat_mass\n";
  for (std::size_t n = 0; n < bank.size(); ++n) {
    const FilterProfile& f = bank[n];
    const double half = 50.0 * std::max(f.width(), bank.nominal_spacing());
    const std::size_t points = 20001;
    const double step = 2.0 * half / static_cast<double>(points - 1);
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) v[i] = f.evaluate(f.center() - half + static_cast<double>(i) * step);
    const auto curve = dominance_curve(Grid1D::normalized(f.center() - half, step, std::move(v)));
    const std::size_t stride = std::max<std::size_t>(1, curve.size() / 400);
    for (std::size_t k = 0; k < curve.size(); k += stride) {
      const auto& pt = curve[k];
      if (pt.measure > 4.0 * bank.nominal_spacing()) break;
      s += std::to_string(n) + "," + format_double(pt.measure) + "," + format_double(pt.mass) + "," +
           format_double(std::min(pt.measure / bank.nominal_spacing(), 1.0)) + "\n";
    }
  }
  return s;
}

int cmd_filters_check(const Options& o, std::ostream& out, std::ostream&) {
  const Config cfg = load_config(o.config);
  require_known_keys(cfg.j, {"bank", "nominal_spacing_rad_per_s", "weight_window_fwhm", "run_id"}, "filters-check config");
  const auto bank_path = path_req(cfg, "bank");
  FilterBank bank = load_bank_manifest(bank_path);
  if (cfg.j.contains("nominal_spacing_rad_per_s"))
    bank = FilterBank(bank.profiles(), number_req(cfg.j, "nominal_spacing_rad_per_s"), bank.nominal_centers());
  WeightOptions wopts;
  wopts.window_widths = number_or(cfg.j, "weight_window_fwhm", wopts.window_widths);

  Run run("filters-check", o.out_dir);
  run.add_input(bank_path);
  run.set_config({{"nominal_spacing_rad_per_s", bank.nominal_spacing()}, {"weight_window_fwhm", wopts.window_widths}});

  const BankCheck check = check_bank(bank);
  const FilterProfile target = mean_filter(bank);
  const TopHatCheck mean_check = majorized_by_tophat(target, bank.nominal_spacing());
  std::optional<WeightReport> weights;
  std::string weight_error;
  try {
    weights = bank_weights(bank, wopts);
  } catch (const DegenerateRatio& e) {
    weight_error = e.what();
  }
  const bool uniform = bank.uniform();
  const bool pass = uniform ? check.all_majorized : (mean_check.verdict && weights.has_value());

  json filters = json::array();
  std::ostringstream s;
  s << "entrocert filters-check\n";
  s << "nominal spacing: " << bank.nominal_spacing() << " rad/s (top-hat height " << 1.0 / bank.nominal_spacing() << ")\n";
  s << "filter  profile                                              peak          margin        majorized  w_n\n";
  for (std::size_t n = 0; n < bank.size(); ++n) {
    const auto& c = check.per_filter[n];
    json f{{"index", n}, {"profile", bank[n].describe()}, {"nominal_center_rad_per_s", bank.nominal_centers()[n]},
           {"offset_rad_per_s", bank.offsets()[n]}, {"peak_per_rad_per_s", bank[n].peak()},
           {"margin_per_rad_per_s", c.margin}, {"majorized", c.verdict}};
    if (weights) f["w_n"] = weights->per_filter_w[n];
    filters.push_back(f);
    std::ostringstream line;
    line << std::left << std::setw(8) << n << std::setw(53) << bank[n].describe().substr(0, 52) << std::setw(14)
         << std::setprecision(6) << bank[n].peak() << std::setw(14) << c.margin << std::setw(11)
         << (c.verdict ? "yes" : "NO") << (weights ? fixed(weights->per_filter_w[n], 6) : "-") << "\n";
    s << line.str();
  }
  s << "bank is " << (uniform ? "uniform (fixed filters)" : "drifting or non-identical filters") << "\n";
  if (!uniform) s << "mean filter majorized: " << (mean_check.verdict ? "yes" : "NO") << " (margin " << mean_check.margin << ")\n";
  if (weights)
    s << "w0 = " << fixed(weights->w0, 6) << " (filter " << weights->argmin_index << ")\n";
  else
    s << "weights degenerate: " << weight_error << "\n";
  s << "verdict: " << (pass ? "PASS" : "FAIL") << "\n";
  s << "run_id: " << run.id() << "\n";

  json rep{{"filters", filters},
           {"nominal_spacing_rad_per_s", bank.nominal_spacing()},
           {"uniform", uniform},
           {"all_majorized", check.all_majorized},
           {"min_margin_per_rad_per_s", check.min_margin},
           {"worst_index", check.worst_index},
           {"mean_filter", {{"profile", target.describe()}, {"majorized", mean_check.verdict}, {"margin_per_rad_per_s", mean_check.margin}}},
           {"w0", weights ? json(weights->w0) : json(nullptr)},
           {"w0_index", weights ? json(weights->argmin_index) : json(nullptr)},
           {"weight_error", weight_error.empty() ? json(nullptr) : json(weight_error)},
           {"pass", pass}};
  run.write_json("report.json", rep);
  const auto comments = run.csv_comments();
  run.write("profiles.csv", profiles_csv(bank, comments));
  run.write("dominance.csv", dominance_csv(bank, comments));
  {
    std::string w;
    for (const auto& c : comments) w += "# " + c + "\n";
    w += "filter_index,w_n,tail_limited,location_rad_per_s\n";
    if (weights) {
      for (std::size_t n = 0; n < bank.size(); ++n) {
        const auto& d = weights->details[n];
        w += std::to_string(n) + "," + format_double(d.value) + "," + (d.tail_limited ? "1" : "0") + "," +
             format_double(d.location) + "\n";
      }
    }
    run.write("weights.csv", w);
  }
  run.write("summary.txt", s.str());
  run.finish();
  out << s.str();
  return pass ? kCertified : kPreconditionsFailed;
}

// ---------------------------------------------------------------------------

int cmd_budget(const Options& o, std::ostream& out, std::ostream&) {
  const Config cfg = load_config(o.config);
  require_known_keys(cfg.j,
                     {"timing_fwhm_ps", "timebin_ps", "timing_histogram", "background_wing_fraction", "h_time_bits",
                      "wavelength_nm", "inequality", "run_id"},
                     "budget config");
  const Inequality q = inequality_from_string(o.inequality.empty() ? string_or(cfg.j, "inequality", "conditional") : o.inequality);
  const double wavelength = number_req(cfg.j, "wavelength_nm") * 1e-9;
  Run run("budget", o.out_dir);

  double h_time = 0.0;
  std::string source;
  const int given = int(cfg.j.contains("timing_fwhm_ps")) + int(cfg.j.contains("timing_histogram")) +
                    int(cfg.j.contains("h_time_bits"));
  if (given != 1) throw ConfigError("give exactly one of timing_fwhm_ps, timing_histogram, h_time_bits");
  json snapshot{{"wavelength_nm", wavelength * 1e9}, {"inequality", to_string(q)}};
  if (cfg.j.contains("timing_fwhm_ps")) {
    const double fwhm = number_req(cfg.j, "timing_fwhm_ps") * 1e-12;
    const double bin = number_or(cfg.j, "timebin_ps", 1.0) * 1e-12;
    const auto hist = expected_histogram(sigma_from_fwhm(fwhm), bin, 1.0);
    h_time = timing_entropy_bound(hist).value_bits;
    snapshot["timing_fwhm_ps"] = fwhm * 1e12;
    snapshot["timebin_ps"] = bin * 1e12;
    source = "Gaussian timing difference, FWHM " + fixed(fwhm * 1e12, 1) + " ps binned at " + fixed(bin * 1e12, 3) + " ps";
  } else if (cfg.j.contains("timing_histogram")) {
    const auto p = path_req(cfg, "timing_histogram");
    run.add_input(p);
    auto hist = load_histogram(p);
    const double wing = number_or(cfg.j, "background_wing_fraction", 0.0);
    if (wing > 0.0) hist = subtract_background(hist, wing);
    h_time = timing_entropy_bound(hist).value_bits;
    snapshot["background_wing_fraction"] = wing;
    source = "histogram " + p.filename().string();
  } else {
    h_time = number_req(cfg.j, "h_time_bits");
    snapshot["h_time_bits"] = h_time;
    source = "given";
  }
  run.set_config(snapshot);

  const FrequencyBudget b = frequency_budget(h_time, wavelength, q);
  std::ostringstream s;
  s << "entrocert budget (" << to_string(q) << " threshold " << fixed(witness_threshold(q)) << " bits)\n";
  s << "timing source: " << source << "\n";
  s << std::left << std::setw(40) << "quantity" << "value\n";
  auto row = [&](const std::string& name, const std::string& v) { s << std::left << std::setw(40) << name << v << "\n"; };
  row("timing bound (bits)", fixed(h_time));
  row("max frequency entropy (bits)", fixed(b.max_h_freq_bits));
  row("Gaussian sigma cap (MHz, omega/2pi)", fixed(b.max_sigma_rad_per_s / kTwoPi / 1e6, 2));
  row("Gaussian FWHM cap (pm at " + fixed(wavelength * 1e9, 1) + " nm)", fixed(b.max_fwhm_gauss_m * 1e12, 3));
  row("Lorentzian FWHM cap (GHz, omega/2pi)", fixed(b.max_fwhm_lorentz_rad_per_s / kTwoPi / 1e9, 4));
  s << "run_id: " << run.id() << "\n";

  json rep = to_json(b);
  rep["h_time_bits"] = h_time;
  rep["max_sigma_mhz"] = b.max_sigma_rad_per_s / kTwoPi / 1e6;
  rep["max_fwhm_lorentz_ghz"] = b.max_fwhm_lorentz_rad_per_s / kTwoPi / 1e9;
  rep["wavelength_nm"] = wavelength * 1e9;
  rep["inequality"] = to_string(q);
  run.write_json("budget.json", rep);
  run.write("summary.txt", s.str());
  run.finish();
  out << s.str();
  return kCertified;
}

// ---------------------------------------------------------------------------

FilterProfile prototype_filter(const std::string& kind, double ratio, double voigt_ratio, double spacing) {
  if (!(ratio > 0.0)) throw ConfigError("filter_width_ratio must be positive");
  if (kind == "lorentzian") return FilterProfile::lorentzian(ratio * spacing);
  if (kind == "gaussian") return FilterProfile::gaussian(ratio * spacing);
  if (kind == "top_hat") return FilterProfile::top_hat(ratio * spacing);
  if (kind == "voigt") return FilterProfile::voigt(ratio * spacing, voigt_ratio * spacing);
  throw ConfigError("unknown filter_kind '" + kind + "' (lorentzian, gaussian, top_hat, voigt)");
}

// Bank of `count` copies of `proto` centered symmetrically about zero.
FilterBank symmetric_bank(const FilterProfile& proto, double spacing, std::size_t count) {
  const double first = -0.5 * static_cast<double>(count - 1) * spacing;
  return FilterBank::regular(proto, first, spacing, count);
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(o.config);
  require_known_keys(
      cfg.j,
      {"state", "pump_sigma_rad_per_s", "phasematch_sigma_rad_per_s", "timing_fwhm_ps", "crystal_length_mm",
       "gvd_fs2_per_mm", "jitter_a_ps", "jitter_b_ps", "timebin_ps", "total_pairs", "filter_kind",
       "filter_width_ratio", "voigt_sigma_ratio", "nominal_spacing_rad_per_s", "filters_b", "margin_sigmas",
       "points_per_fwhm", "jitter_shift_fwhm", "jitter_width_excess", "background_per_cell",
       "timing_background_per_bin", "noiseless", "seed", "inequality", "background_wing_fraction", "weights",
       "resamples"},
      "simulate config");

  const std::string state = string_or(cfg.j, "state", "spdc");
  if (state != "spdc" && state != "product") throw ConfigError("state must be \"spdc\" or \"product\"");
  SpdcParams p;
  p.pump_sigma_rad_per_s = number_req(cfg.j, "pump_sigma_rad_per_s");
  p.phasematch_sigma_rad_per_s = number_req(cfg.j, "phasematch_sigma_rad_per_s");
  p.crystal_length_mm = number_or(cfg.j, "crystal_length_mm", p.crystal_length_mm);
  p.gvd_fs2_per_mm = number_or(cfg.j, "gvd_fs2_per_mm", p.gvd_fs2_per_mm);
  p.jitter_a_s = number_or(cfg.j, "jitter_a_ps", 20.0) * 1e-12;
  p.jitter_b_s = number_or(cfg.j, "jitter_b_ps", 20.0) * 1e-12;
  p.timebin_s = number_or(cfg.j, "timebin_ps", 1.0) * 1e-12;
  for (const auto& w : p.validate()) err << "warning: " << w << "\n";

  const std::uint64_t total_pairs = count_or(cfg.j, "total_pairs", 0);
  if (total_pairs == 0) throw ConfigError("total_pairs must be a positive integer");
  const double spacing = number_req(cfg.j, "nominal_spacing_rad_per_s");
  if (!(spacing > 0.0)) throw ConfigError("nominal_spacing_rad_per_s must be positive");
  const std::string kind = string_or(cfg.j, "filter_kind", "lorentzian");
  const double ratio = number_or(cfg.j, "filter_width_ratio", 0.75);
  const double voigt_ratio = number_or(cfg.j, "voigt_sigma_ratio", 0.0);
  const std::uint64_t filters_b = count_or(cfg.j, "filters_b", 20);
  const double margin = number_or(cfg.j, "margin_sigmas", 8.0);
  const double ppf = number_or(cfg.j, "points_per_fwhm", 20.0);
  const std::uint64_t seed = o.seed ? *o.seed : count_or(cfg.j, "seed", 0);
  if (filters_b == 0 || !(margin > 0.0) || !(ppf >= 20.0))
    throw ConfigError("filters_b must be positive, margin_sigmas positive and points_per_fwhm at least 20");

  const FilterProfile proto = prototype_filter(kind, ratio, voigt_ratio, spacing);
  FilterBank bank_a, bank_b;
  if (state == "spdc") {
    bank_b = symmetric_bank(proto, spacing, filters_b);
    const double sp2 = p.pump_sigma_rad_per_s * p.pump_sigma_rad_per_s;
    const double sm2 = p.phasematch_sigma_rad_per_s * p.phasematch_sigma_rad_per_s;
    const double slope = std::abs((sp2 - sm2) / (sp2 + sm2));
    const double reach = slope * bank_b.span_hi() + margin * spdc_conditional_sigma(p);
    const auto count_a = static_cast<std::size_t>(std::ceil(2.0 * reach / spacing));
    bank_a = symmetric_bank(proto, spacing, count_a);
  } else {
    const double sigma = spdc_marginal_sigma(p);
    const auto count = static_cast<std::size_t>(std::ceil(2.0 * margin * sigma / spacing));
    bank_a = symmetric_bank(proto, spacing, count);
    bank_b = bank_a;
    p.pump_sigma_rad_per_s = p.phasematch_sigma_rad_per_s = std::numbers::sqrt2 * sigma;
  }
  if (bank_a.size() * bank_b.size() > 4'000'000) throw ConfigError("filter grid too large; raise nominal_spacing_rad_per_s");

  const double jitter_shift = number_or(cfg.j, "jitter_shift_fwhm", 0.0);
  const double jitter_width = number_or(cfg.j, "jitter_width_excess", 0.0);
  // Jitter only widens filters, so the prototype is the narrowest realized profile.
  const double step = std::min(proto.width() / ppf, std::min(p.pump_sigma_rad_per_s, p.phasematch_sigma_rad_per_s) / 20.0);
  GridSpec2D grid;
  {
    const double span_a = bank_a.span_hi() - bank_a.span_lo();
    const double span_b = bank_b.span_hi() - bank_b.span_lo();
    grid.count_a = static_cast<std::size_t>(std::ceil(span_a / step));
    grid.count_b = static_cast<std::size_t>(std::ceil(span_b / step));
    if (grid.count_a * grid.count_b > 60'000'000) throw ConfigError("density grid too large for this configuration");
    grid.step_a = span_a / static_cast<double>(grid.count_a);
    grid.step_b = span_b / static_cast<double>(grid.count_b);
    grid.start_a = bank_a.span_lo() + 0.5 * grid.step_a;
    grid.start_b = bank_b.span_lo() + 0.5 * grid.step_b;
  }
  const Grid2D rho = joint_spectral_density(p, grid);

  double timing_sigma = 0.0;
  if (cfg.j.contains("timing_fwhm_ps")) {
    timing_sigma = sigma_from_fwhm(number_req(cfg.j, "timing_fwhm_ps") * 1e-12);
  } else {
    timing_sigma = observed_timing_sigma(intrinsic_timing_sigma(p.crystal_length_mm, p.gvd_fs2_per_mm), p.jitter_a_s,
                                         p.jitter_b_s)
                       .sigma_observed;
  }

  CampaignConfig cc;
  cc.total_pairs = total_pairs;
  cc.bank_a = bank_a;
  cc.bank_b = bank_b;
  cc.jitter_a = cc.jitter_b = JitterModel{jitter_shift, jitter_width};
  cc.rng_seed = seed;
  cc.background_per_cell = number_or(cfg.j, "background_per_cell", 0.0);
  cc.noiseless = bool_or(cfg.j, "noiseless", false);
  cc.timing_sigma_s = timing_sigma;
  cc.timebin_s = p.timebin_s;
  cc.timing_background_per_bin = number_or(cfg.j, "timing_background_per_bin", 0.0);
  const CampaignResult res = simulate_campaign(rho, cc);

  const std::string inequality = o.inequality.empty() ? string_or(cfg.j, "inequality", "conditional") : o.inequality;
  inequality_from_string(inequality);
  const double wing = number_or(cfg.j, "background_wing_fraction", cc.timing_background_per_bin > 0.0 ? 0.1 : 0.0);
  const std::string weights = string_or(cfg.j, "weights", "auto");
  const std::size_t resamples = o.resamples ? *o.resamples : count_or(cfg.j, "resamples", 200);

  Run run("simulate", o.out_dir);
  run.add_input(o.config);
  run.set_config({{"state", state}, {"seed", seed}, {"total_pairs", total_pairs}, {"inequality", inequality},
                  {"resamples", resamples}});
  const auto comments = run.csv_comments();
  save_joint_counts(res.counts, run.path("joint_counts.csv"), comments);
  run.record("joint_counts.csv");
  save_histogram(res.histogram, run.path("histogram.csv"), comments);
  run.record("histogram.csv");
  run.write("expected_probabilities.csv", coarse_grained_csv(res.expected, comments));
  run.write_json("bank_a.json", bank_to_json(res.realized_a));
  run.write_json("bank_b.json", bank_to_json(res.realized_b));
  run.write_json("certify.json", {{"timing_histogram", "histogram.csv"},
                                  {"joint_counts", "joint_counts.csv"},
                                  {"bank_a", "bank_a.json"},
                                  {"bank_b", "bank_b.json"},
                                  {"inequality", inequality},
                                  {"background_wing_fraction", wing},
                                  {"weights", weights},
                                  {"resamples", resamples},
                                  {"seed", seed}});
  run.finish();

  std::ostringstream s;
  s << "entrocert simulate (" << state << ")\n";
  s << "filters: " << bank_a.size() << " x " << bank_b.size() << ", spacing " << spacing << " rad/s, " << kind << "\n";
  s << "density grid: " << grid.count_a << " x " << grid.count_b << "\n";
  s << "pairs: " << total_pairs << (cc.noiseless ? " (expected counts)" : " (Poisson)") << "\n";
  s << "timing sigma: " << fixed(timing_sigma * 1e12, 3) << " ps\n";
  for (const auto& w : res.expected.warnings) s << "warning: " << w << "\n";
  s << "wrote " << (fs::path(o.out_dir) / "certify.json").string() << "\n";
  s << "run_id: " << run.id() << "\n";
  out << s.str();
  return kCertified;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"entrocert: conservative entropy bounds and energy-time entanglement witnesses"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ENTROCERT_VERSION);
  Options o;
  std::uint64_t seed = 0;
  std::size_t resamples = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
    sub->add_option("--resamples", resamples, "bootstrap resamples, 0 to skip (overrides the config)");
    sub->add_option("--inequality", o.inequality, "sum-diff or conditional")
        ->check(CLI::IsMember({"sum-diff", "conditional"}));
  };
  auto* certify = app.add_subcommand("certify", "evaluate the witness on timing and filter-pair count data");
  auto* check = app.add_subcommand("filters-check", "top-hat majorization and weights of a filter bank");
  auto* budget = app.add_subcommand("budget", "frequency-entropy budget left by a timing bound");
  auto* simulate = app.add_subcommand("simulate", "seeded synthetic measurement campaign");
  for (auto* sub : {certify, check, budget, simulate}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kInputError;
  }
  for (auto* sub : {certify, check, budget, simulate}) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--resamples")) o.resamples = resamples;
  }

  try {
    if (certify->parsed()) return cmd_certify(o, out, err);
    if (check->parsed()) return cmd_filters_check(o, out, err);
    if (budget->parsed()) return cmd_budget(o, out, err);
    return cmd_simulate(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  }
  return kInputError;
}

}  // namespace entrocert::cli
