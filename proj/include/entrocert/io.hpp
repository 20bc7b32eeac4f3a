#pragma once

// File formats: numeric CSV tables, tabulated filter CSVs, bank manifests,
// JSON encodings of results, and SHA-256 digests.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "entrocert/coarsegrain.hpp"
#include "entrocert/filters.hpp"
#include "entrocert/witness.hpp"

namespace entrocert {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory, then renames.
void write_text(const std::filesystem::path& path, std::string_view text);

struct CsvTable {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  ///< 1-based source line of each row
};

/// Parses a numeric CSV whose header must equal `columns` (whitespace
/// around names ignored). '#' lines and blank lines are skipped.
CsvTable read_numeric_csv(const std::filesystem::path& path, const std::vector<std::string>& columns);
CsvTable parse_numeric_csv(std::string_view text, const std::vector<std::string>& columns,
                           const std::string& source);

/// Header `omega_rad_per_s,transmission`.
FilterProfile load_profile_csv(const std::filesystem::path& path, double center,
                               double noise_floor_fraction = 1e-6);

/// Rejects keys outside `allowed`.
void require_known_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                        const std::string& where);

FilterProfile profile_from_json(const nlohmann::json& j, double default_center);
nlohmann::json profile_to_json(const FilterProfile& f);

/// Bank manifest: {"nominal_spacing_rad_per_s": x, "filters": [{"nominal_center_rad_per_s": c,
/// "profile": {...}} | {"nominal_center_rad_per_s": c, "csv": path, ...}]}. Relative CSV
/// paths resolve against the manifest's directory.
FilterBank load_bank_manifest(const std::filesystem::path& path);
FilterBank bank_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Analytic profiles only.
nlohmann::json bank_to_json(const FilterBank& bank);

nlohmann::json to_json(const EntropyBound& b);
nlohmann::json to_json(const WitnessReport& r);
nlohmann::json to_json(const FrequencyBudget& b);

/// CSV `m_index,n_index,probability` with the bin geometry in comments.
std::string coarse_grained_csv(const CoarseGrained2D& cg, const std::vector<std::string>& comments = {});

}  // namespace entrocert
