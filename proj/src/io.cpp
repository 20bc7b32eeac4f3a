#include "entrocert/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "entrocert/errors.hpp"

namespace entrocert {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

double parse_number(const std::string& field, std::size_t line, const std::string& source) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw SchemaError(source + ": '" + field + "' is not a finite number", line);
  return v;
}

}  // namespace

CsvTable parse_numeric_csv(std::string_view text, const std::vector<std::string>& columns,
                           const std::string& source) {
  CsvTable table;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    const auto fields = split(line);
    if (!header_seen) {
      if (fields != columns)
        throw SchemaError(source + ": expected header '" + join(columns) + "'", line_no);
      header_seen = true;
    } else {
      if (fields.size() != columns.size())
        throw SchemaError(source + ": expected " + std::to_string(columns.size()) + " columns (" +
                              join(columns) + ")",
                          line_no);
      std::vector<double> row;
      row.reserve(fields.size());
      for (const auto& f : fields) row.push_back(parse_number(f, line_no, source));
      table.rows.push_back(std::move(row));
      table.lines.push_back(line_no);
    }
    if (nl == text.size()) break;
  }
  if (!header_seen) throw SchemaError(source + ": missing header '" + join(columns) + "'");
  return table;
}

CsvTable read_numeric_csv(const fs::path& path, const std::vector<std::string>& columns) {
  return parse_numeric_csv(read_text(path), columns, path.string());
}

FilterProfile load_profile_csv(const fs::path& path, double center, double noise_floor_fraction) {
  const auto t = read_numeric_csv(path, {"omega_rad_per_s", "transmission"});
  std::vector<double> omega, trans;
  omega.reserve(t.rows.size());
  trans.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    omega.push_back(r[0]);
    trans.push_back(r[1]);
  }
  try {
    return FilterProfile::tabulated(omega, trans, center, noise_floor_fraction);
  } catch (const InvalidDensity& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void require_known_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || item.key() == a;
    if (!ok) {
      const auto& k = item.key();
      bool suffixed = false;
      for (std::string_view u : {"_rad_per_s", "_ps", "_pm", "_nm", "_mm", "_s", "_m", "_hz"})
        suffixed = suffixed || (k.size() > u.size() && k.compare(k.size() - u.size(), u.size(), u) == 0);
      const std::string hint =
          suffixed ? "" : " (physical quantities need a unit suffix such as _rad_per_s, _ps, _pm, _mm)";
      throw ConfigError(where + ": unknown key '" + k + "'" + hint);
    }
  }
}

namespace {

double number_at(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

FilterProfile profile_from_json(const json& j, double default_center) {
  const std::string where = "profile";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError(where + ": needs a string 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  const double center = j.contains("center_rad_per_s") ? number_at(j, "center_rad_per_s", where) : default_center;
  if (kind == "top_hat") {
    require_known_keys(j, {"kind", "center_rad_per_s", "width_rad_per_s"}, where);
    return FilterProfile::top_hat(number_at(j, "width_rad_per_s", where), center);
  }
  if (kind == "lorentzian") {
    require_known_keys(j, {"kind", "center_rad_per_s", "fwhm_rad_per_s"}, where);
    return FilterProfile::lorentzian(number_at(j, "fwhm_rad_per_s", where), center);
  }
  if (kind == "gaussian") {
    require_known_keys(j, {"kind", "center_rad_per_s", "sigma_rad_per_s"}, where);
    return FilterProfile::gaussian(number_at(j, "sigma_rad_per_s", where), center);
  }
  if (kind == "voigt") {
    require_known_keys(j, {"kind", "center_rad_per_s", "fwhm_lorentz_rad_per_s", "sigma_gauss_rad_per_s"}, where);
    return FilterProfile::voigt(number_at(j, "fwhm_lorentz_rad_per_s", where),
                                number_at(j, "sigma_gauss_rad_per_s", where), center);
  }
  throw ConfigError(where + ": unknown kind '" + kind + "' (top_hat, lorentzian, gaussian, voigt)");
}

json profile_to_json(const FilterProfile& f) {
  json j;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TopHat>) {
          j["kind"] = "top_hat";
          j["width_rad_per_s"] = s.width;
        } else if constexpr (std::is_same_v<T, Lorentzian>) {
          j["kind"] = "lorentzian";
          j["fwhm_rad_per_s"] = s.fwhm;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          j["kind"] = "gaussian";
          j["sigma_rad_per_s"] = s.sigma;
        } else if constexpr (std::is_same_v<T, Voigt>) {
          j["kind"] = "voigt";
          j["fwhm_lorentz_rad_per_s"] = s.fwhm_lorentz;
          j["sigma_gauss_rad_per_s"] = s.sigma_gauss;
        } else {
          throw Unsupported("only analytic profiles can be written to a bank manifest: " + f.describe());
        }
      },
      f.shape());
  j["center_rad_per_s"] = f.center();
  return j;
}

FilterBank bank_from_json(const json& j, const fs::path& base_dir) {
  require_known_keys(j, {"nominal_spacing_rad_per_s", "filters", "run_id"}, "bank manifest");
  const double spacing = number_at(j, "nominal_spacing_rad_per_s", "bank manifest");
  if (!j.contains("filters") || !j.at("filters").is_array() || j.at("filters").empty())
    throw ConfigError("bank manifest: 'filters' must be a non-empty array");
  std::vector<FilterProfile> profiles;
  std::vector<double> centers;
  std::size_t idx = 0;
  for (const auto& f : j.at("filters")) {
    const std::string where = "bank manifest filter " + std::to_string(idx++);
    require_known_keys(f, {"nominal_center_rad_per_s", "profile", "csv", "center_rad_per_s", "noise_floor_fraction"},
                       where);
    const double nominal = number_at(f, "nominal_center_rad_per_s", where);
    const bool has_profile = f.contains("profile"), has_csv = f.contains("csv");
    if (has_profile == has_csv) throw ConfigError(where + ": give exactly one of 'profile' or 'csv'");
    if (has_profile) {
      profiles.push_back(profile_from_json(f.at("profile"), nominal));
    } else {
      if (!f.at("csv").is_string()) throw ConfigError(where + ": 'csv' must be a path string");
      fs::path p = f.at("csv").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      const double center = f.contains("center_rad_per_s") ? number_at(f, "center_rad_per_s", where) : nominal;
      const double floor = f.contains("noise_floor_fraction") ? number_at(f, "noise_floor_fraction", where) : 1e-6;
      profiles.push_back(load_profile_csv(p, center, floor));
    }
    centers.push_back(nominal);
  }
  return FilterBank(std::move(profiles), spacing, std::move(centers));
}

FilterBank load_bank_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return bank_from_json(j, path.parent_path());
}

json bank_to_json(const FilterBank& bank) {
  json j;
  j["nominal_spacing_rad_per_s"] = bank.nominal_spacing();
  json filters = json::array();
  for (std::size_t n = 0; n < bank.size(); ++n) {
    json f;
    f["nominal_center_rad_per_s"] = bank.nominal_centers()[n];
    f["profile"] = profile_to_json(bank[n]);
    filters.push_back(std::move(f));
  }
  j["filters"] = std::move(filters);
  return j;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const EntropyBound& b) {
  return json{{"value_bits", finite_or_null(b.value_bits)},
              {"kind", to_string(b.kind)},
              {"correction_w0", b.correction_w0},
              {"valid", b.valid},
              {"provenance", b.provenance}};
}

json to_json(const WitnessReport& r) {
  return json{{"h_time_bound", finite_or_null(r.h_time_bound)},
              {"h_freq_bound", finite_or_null(r.h_freq_bound)},
              {"threshold", r.threshold},
              {"margin", finite_or_null(r.margin)},
              {"inequality", to_string(r.inequality)},
              {"certified", r.certified},
              {"w0_used", r.w0_used},
              {"preconditions_met", r.preconditions_met},
              {"reasons", r.reasons},
              {"notes", r.notes},
              {"inputs_digest", r.inputs_digest}};
}

json to_json(const FrequencyBudget& b) {
  return json{{"max_h_freq_bits", b.max_h_freq_bits},
              {"max_sigma_rad_per_s", b.max_sigma_rad_per_s},
              {"max_fwhm_gauss_pm", b.max_fwhm_gauss_m * 1e12},
              {"max_fwhm_gauss_rad_per_s", b.max_fwhm_gauss_rad_per_s},
              {"max_fwhm_lorentz_rad_per_s", b.max_fwhm_lorentz_rad_per_s}};
}

std::string coarse_grained_csv(const CoarseGrained2D& cg, const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  s += "# bin_width_a_rad_per_s: " + format_double(cg.bin_width_a) + "\n";
  s += "# bin_width_b_rad_per_s: " + format_double(cg.bin_width_b) + "\n";
  s += "# origin_a_rad_per_s: " + format_double(cg.origin_a) + "\n";
  s += "# origin_b_rad_per_s: " + format_double(cg.origin_b) + "\n";
  s += "m_index,n_index,probability\n";
  for (std::size_t m = 0; m < cg.probs.rows(); ++m)
    for (std::size_t n = 0; n < cg.probs.cols(); ++n)
      s += std::to_string(m) + "," + std::to_string(n) + "," + format_double(cg.probs(m, n)) + "\n";
  return s;
}

}  // namespace entrocert
