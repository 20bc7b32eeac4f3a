#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "entrocert/errors.hpp"
#include "entrocert/io.hpp"
#include "oracles.hpp"

using namespace entrocert;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "entrocert_test_io";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("digests and formatting") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  const auto p = scratch_dir() / "t.txt";
  write_text(p, "hello");
  CHECK(read_text(p) == "hello");
  CHECK(sha256_file(p) == sha256_hex("hello"));
  CHECK_THROWS_AS(read_text(scratch_dir() / "missing.txt"), Error);
}

TEST_CASE("numeric csv") {
  const auto t = parse_numeric_csv("# comment\na,b\n1,2\n\n3, 4.5\n", {"a", "b"}, "mem");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == 4.5);
  CHECK_THROWS_AS(parse_numeric_csv("a,c\n1,2\n", {"a", "b"}, "mem"), SchemaError);
  CHECK_THROWS_AS(parse_numeric_csv("a,b\n1,x\n", {"a", "b"}, "mem"), SchemaError);
  CHECK_THROWS_AS(parse_numeric_csv("a,b\n1\n", {"a", "b"}, "mem"), SchemaError);
}

TEST_CASE("bank manifests") {
  const auto dir = scratch_dir();
  {
    std::ofstream csv(dir / "f1.csv");
    csv << "omega_rad_per_s,transmission\n";
    for (int i = -300; i <= 300; ++i) csv << 1.0 + i * 0.01 << "," << oracle::lorentzian(i * 0.01, 0.8) << "\n";
  }
  const json j = {{"nominal_spacing_rad_per_s", 1.0},
                  {"filters",
                   {{{"nominal_center_rad_per_s", 0.0}, {"profile", {{"kind", "lorentzian"}, {"fwhm_rad_per_s", 0.8}}}},
                    {{"nominal_center_rad_per_s", 1.0}, {"csv", "f1.csv"}}}}};
  write_text(dir / "bank.json", j.dump());
  const auto bank = load_bank_manifest(dir / "bank.json");
  REQUIRE(bank.size() == 2);
  CHECK(bank[0].kind() == ProfileKind::Lorentzian);
  CHECK(bank[1].kind() == ProfileKind::Tabulated);
  CHECK(bank[1].center() == 1.0);

  const auto analytic = FilterBank::regular(FilterProfile::voigt(1.0, 0.2), -1.0, 1.0, 3);
  const auto round = bank_from_json(bank_to_json(analytic), dir);
  for (std::size_t n = 0; n < 3; ++n) CHECK(round[n].same_shape(analytic[n]));
  CHECK(round.nominal_centers() == analytic.nominal_centers());
  CHECK_THROWS_AS(bank_to_json(bank), Unsupported);

  json bad = j;
  bad["spacing"] = 1.0;
  try {
    bank_from_json(bad, dir);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("unit suffix") != std::string::npos);
  }
  json both = j;
  both["filters"][0]["csv"] = "f1.csv";
  CHECK_THROWS_AS(bank_from_json(both, dir), ConfigError);
  json unknown_kind = j;
  unknown_kind["filters"][0]["profile"]["kind"] = "sinc";
  CHECK_THROWS_AS(bank_from_json(unknown_kind, dir), ConfigError);
}

TEST_CASE("report json") {
  EntropyBound b;
  b.value_bits = std::numeric_limits<double>::infinity();
  b.kind = BoundKind::SumVariable;
  const auto j = to_json(b);
  CHECK(j["value_bits"].is_null());
  CHECK(j["kind"] == "sum_variable");
  CHECK(j["valid"] == false);
  for (const char* key : {"value_bits", "kind", "correction_w0", "valid", "provenance"}) CHECK(j.contains(key));
}
