#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "pnrs/config.hpp"
#include "pnrs/output.hpp"

using namespace pnrs;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string temp_path(const std::string& leaf) {
  return (std::filesystem::temp_directory_path() / leaf).string();
}

// A config exercising comments, blank lines, loose whitespace and a
// non-ASCII value. Line numbers below refer to this literal.
const char* kSampleConfig =
    "# run header\n"                  // 1
    "\n"                              // 2
    "experiment = solve\n"            // 3
    "  grid.n_r=48\n"                 // 4
    "grid.cfl =\t0.4\n"               // 5
    "coeff.a = -2.5\n"                // 6
    "out = r\xC3\xA9sultats\n"        // 7
    "seed = 42\n";                    // 8

int error_line(const std::string& text) {
  try {
    parse_config_text(text, "inline");
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("config parser accepts comments, whitespace and UTF-8 values") {
  const RunConfig cfg = parse_config_text(kSampleConfig, "inline");
  CHECK(cfg.experiment == "solve");
  CHECK(cfg.grid.n_r == 48);
  CHECK(cfg.grid.cfl == doctest::Approx(0.4));
  CHECK(cfg.a == doctest::Approx(-2.5));
  CHECK(cfg.out_dir == "r\xC3\xA9sultats");
  CHECK(cfg.seed == 42);
  CHECK(cfg.entries.at("grid.n_r").line == 4);

  // A UTF-8 byte-order mark is tolerated, not part of the first key.
  const RunConfig with_bom = parse_config_text(std::string("\xEF\xBB\xBF") + kSampleConfig, "bom");
  CHECK(with_bom.experiment == "solve");
}

TEST_CASE("schema violations carry the offending line") {
  const std::string base = "experiment = solve\n";

  SUBCASE("unknown key") {
    CHECK(error_line(base + "grid.nr = 48\n") == 2);
  }
  SUBCASE("duplicate key") {
    const std::string text = base + "seed = 1\ncoeff.a = 0\nseed = 2\n";
    CHECK(error_line(text) == 4);
    try {
      parse_config_text(text, "inline");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("first at line 2") != std::string::npos);
    }
  }
  SUBCASE("malformed number") {
    CHECK(error_line(base + "coeff.a = fast\n") == 2);
    CHECK(error_line(base + "grid.cfl = 0.4x\n") == 2);
  }
  SUBCASE("missing equals sign") {
    CHECK(error_line(base + "grid.n_r 48\n") == 2);
  }
  SUBCASE("key with forbidden characters") {
    CHECK(error_line(base + "grid n_r = 48\n") == 2);
  }
  SUBCASE("missing experiment is a file-level error") {
    CHECK(error_line("seed = 1\n") == 0);
  }
  SUBCASE("invalid UTF-8 payload") {
    CHECK(error_line(base + "out = bad\xFF\n") == 2);
    CHECK(error_line(base + "out = cut\xC3") == 2);
  }
  SUBCASE("non-integer where an integer is required") {
    CHECK(error_line(base + "grid.n_r = 48.5\n") == 2);
    CHECK(error_line(base + "seed = 3.5\n") == 2);
  }
  SUBCASE("domain checks name the key's line") {
    CHECK(error_line(base + "coeff.kappa = 3\n") == 2);
    CHECK(error_line(base + "grid.cfl = 1.5\n") == 2);
    CHECK(error_line(base + "grid.mode = cartesian\n") == 2);
  }
}

TEST_CASE("typed accessors fall back and convert") {
  const RunConfig cfg = parse_config_text("experiment = solve\ncoeff.a = 2\n", "inline");
  CHECK(cfg.num("coeff.a", 0.0) == doctest::Approx(2.0));
  CHECK(cfg.num("coeff.d", 7.5) == doctest::Approx(7.5));
  CHECK(cfg.integer("coeff.a", 0) == 2);
  CHECK(cfg.str("metric", "cylinder") == "cylinder");
  CHECK(cfg.has("coeff.a"));
  CHECK_FALSE(cfg.has("coeff.d"));
}

TEST_CASE("config hash is stable under reparse and sensitive to content") {
  const RunConfig a = parse_config_text(kSampleConfig, "a");
  const RunConfig b = parse_config_text(kSampleConfig, "b");
  CHECK(config_hash(a) == config_hash(b));

  std::string changed = kSampleConfig;
  const size_t at = changed.find("-2.5");
  changed.replace(at, 4, "-2.6");
  CHECK(config_hash(parse_config_text(changed, "c")) != config_hash(a));

  // The effective seed participates even when it comes from outside the file.
  RunConfig reseeded = a;
  reseeded.seed = 43;
  CHECK(config_hash(reseeded) != config_hash(a));
}

TEST_CASE("csv output is byte deterministic") {
  const std::vector<std::string> header = {"t", "value"};
  const std::vector<std::vector<double>> rows = {
      {0.1, 1.0 / 3.0}, {0.2, -2.5e-17}, {0.3, 12345678.901234567}};
  const std::string p1 = temp_path("pnrs_csv_a.csv");
  const std::string p2 = temp_path("pnrs_csv_b.csv");
  write_csv(p1, header, rows);
  write_csv(p2, header, rows);
  const std::string body = slurp(p1);
  CHECK(body == slurp(p2));
  CHECK(body.substr(0, 8) == "t,value\n");

  // Shortest-round-trip printing must reproduce the exact double.
  for (double v : {1.0 / 3.0, -2.5e-17, 12345678.901234567, 0.0}) {
    CHECK(std::stod(csv_num(v)) == v);
  }
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("snapshot round-trips header and payload") {
  GridSpec g;
  g.mode = GridMode::Radial;
  g.n_r = 24;
  g.t_min = -0.3;
  g.t_max = 0.3;
  CauchyData data;
  data.phi0 = [](const Vec4d& x) { return std::exp(-std::pow((x[1] - 1.5) / 0.4, 2)); };
  data.phi1 = [](const Vec4d&) { return 0.0; };
  const Trajectory traj = solve_semilinear(g, CoefficientFields{}, SourceTerm{}, &data);
  REQUIRE_FALSE(traj.blew_up);

  const std::string path = temp_path("pnrs_snap.bin");
  write_snapshot(path, traj);

  const std::string raw = slurp(path);
  REQUIRE(raw.size() > 28);
  CHECK(raw.compare(0, 4, "PNRS") == 0);
  // u32 little-endian: version 1, mode tag 0 (radial), rank 3.
  CHECK(static_cast<unsigned char>(raw[4]) == 1);
  CHECK(static_cast<unsigned char>(raw[8]) == 0);
  CHECK(static_cast<unsigned char>(raw[12]) == 3);

  const SnapshotData d = read_snapshot(path);
  CHECK(d.version == kSnapshotVersion);
  CHECK(d.mode == static_cast<std::uint32_t>(GridMode::Radial));
  REQUIRE(d.dims.size() == 3);
  CHECK(d.dims[0] == traj.slices.size());
  CHECK(d.dims[1] == 24);
  CHECK(d.dims[2] == 1);
  REQUIRE(d.data.size() == d.dims[0] * d.dims[1] * d.dims[2]);
  // Row-major payload: slice s, then radial index.
  const size_t mid = d.dims[0] / 2;
  for (int i = 0; i < g.n_r; ++i) {
    CHECK(d.data[mid * 24 + i] == traj.slices[mid](i, 0));
  }

  const nlohmann::json meta = nlohmann::json::parse(slurp(path + ".json"));
  CHECK(meta.at("n_r").get<int>() == 24);
  CHECK(meta.at("dt").get<double>() == doctest::Approx(traj.dt));
  CHECK(meta.at("times").size() == d.dims[0]);
  CHECK_FALSE(meta.at("blew_up").get<bool>());

  std::remove(path.c_str());
  std::remove((path + ".json").c_str());

  CHECK_THROWS_WITH_AS(read_snapshot(temp_path("pnrs_absent.bin")),
                       doctest::Contains("cannot open snapshot"), std::runtime_error);
  const std::string bad = temp_path("pnrs_bad_magic.bin");
  write_text(bad, "NOPE garbage");
  CHECK_THROWS_WITH_AS(read_snapshot(bad), doctest::Contains("bad snapshot magic"),
                       std::runtime_error);
  std::remove(bad.c_str());
}

TEST_CASE("run manifest serializes checks and hash") {
  RunManifest m;
  m.experiment = "solve";
  m.config_hash = 0x0123456789abcdefull;
  m.wall_seconds = 1.25;
  m.seed = 7;
  m.files = {"field.bin", "probes.csv"};
  m.checks = {{"completed", true}, {"residual", false}};
  m.notes = {"short run"};

  const std::string path = temp_path("pnrs_manifest.json");
  m.write(path);
  const nlohmann::json j = nlohmann::json::parse(slurp(path));
  CHECK(j.at("experiment") == "solve");
  CHECK(j.at("config_hash") == "0123456789abcdef");
  CHECK(j.at("seed").get<std::uint64_t>() == 7);
  CHECK(j.at("files").size() == 2);
  REQUIRE(j.at("checks").size() == 2);
  CHECK(j.at("checks")[0].at("id") == "completed");
  CHECK(j.at("checks")[0].at("pass").get<bool>());
  CHECK_FALSE(j.at("checks")[1].at("pass").get<bool>());
  CHECK(j.at("notes")[0] == "short run");
  std::remove(path.c_str());
}
