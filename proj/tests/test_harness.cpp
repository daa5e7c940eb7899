#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "invsteer/harness/experiment.hpp"

using namespace invsteer;
using namespace invsteer::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("invsteer_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config text parsing") {
  SECTION("comments, blanks, and run.* lines are skipped") {
    const auto kv = parse_config_text(
        "# a comment\n"
        "\n"
        "alpha = 5.0  # trailing comment\n"
        "preset = lorenz-origin\n"
        "run.status = converged\n"
        "run.final_t = 1.0\n");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0].first == "alpha");
    CHECK(kv[0].second == "5.0");
    CHECK(kv[1].first == "preset");
    CHECK(kv[1].second == "lorenz-origin");
  }
  SECTION("a line without = is an error that names the line") {
    try {
      parse_config_text("alpha = 1\nnonsense\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SECTION("an empty key is rejected") {
    CHECK_THROWS_AS(parse_config_text(" = 5\n"), ConfigError);
  }
}

TEST_CASE("config resolution") {
  SECTION("preset defaults fill everything a bare preset needs") {
    const auto cfg = resolve_config({{{"preset", "lorenz-origin"}}});
    CHECK(cfg.schedule == "geometric");
    CHECK(cfg.alpha == 5.0);
    CHECK(cfg.kappa == 3.0);
    CHECK(cfg.t1 == 0.01);
    CHECK(cfg.t_max == 20.0);
    CHECK(cfg.convergence_tol == 1e-10);
    CHECK(cfg.seed == 1);
  }
  SECTION("later layers win: flags override the file") {
    const KeyValues file = {{"preset", "lorenz-origin"}, {"alpha", "1.0"}};
    const KeyValues flags = {{"alpha", "2.5"}};
    const auto cfg = resolve_config({file, flags});
    CHECK(cfg.alpha == 2.5);
  }
  SECTION("a missing preset is an error") {
    CHECK_THROWS_AS(resolve_config({{{"alpha", "1.0"}}}), ConfigError);
  }
  SECTION("an unknown preset is named in the error") {
    try {
      resolve_config({{{"preset", "renard"}}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("renard") != std::string::npos);
    }
  }
  SECTION("an unknown key is named in the error") {
    try {
      resolve_config({{{"preset", "lorenz-origin"}, {"bogus", "1"}}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }
  SECTION("validation failures name the key") {
    try {
      resolve_config({{{"preset", "lorenz-origin"}, {"alpha", "-1"}}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
  }
  SECTION("a fixed schedule with no explicit first time starts one gap after t0") {
    const auto cfg = resolve_config({{{"preset", "lorenz-sync"}}});
    CHECK(cfg.schedule == "fixed");
    CHECK(cfg.delta == 0.1);
    CHECK(cfg.t1 == cfg.t0 + cfg.delta);
  }
}

TEST_CASE("real formatting round-trips bit for bit") {
  CHECK(format_real(1.0) == "1.0000000000000000e+00");
  CHECK(format_real(0.1) == "1.0000000000000001e-01");
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int k = 0; k < 200; ++k) {
    const double v = std::ldexp(mant(eng), expo(eng));
    CHECK(csv_real(format_real(v)) == v);
  }
  CHECK(csv_real(format_real(0.0)) == 0.0);
}

TEST_CASE("trajectory CSV round-trip") {
  const SystemPreset sys = lorenz_preset(LorenzParams{});
  RunSettings cfg;
  cfg.convergence_tol = 0.0;
  const auto run = run_impulsive(sys.field, sys.invariant, std::nullopt, std::nullopt,
                                 sys.default_initial, 0.5, cfg);
  TempDir dir;
  const std::string path = dir.str() + "/trajectory.csv";
  write_trajectory_csv(path, run, 3);
  const auto rows = read_csv(path);
  REQUIRE(rows.size() == run.samples.size() + 1);
  CHECK(rows[0][0] == "t");
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    const auto& row = rows[i + 1];
    const auto& s = run.samples[i];
    CHECK(csv_real(row[0]) == s.t);
    CHECK(csv_real(row[1]) == s.norm_I);
    for (std::size_t j = 0; j < 3; ++j) CHECK(csv_real(row[3 + j]) == s.x[j]);
  }
}

TEST_CASE("manifest: atomic write, both halves read back") {
  TempDir dir;
  const KeyValues config_part = {{"preset", "lorenz-origin"}, {"alpha", format_real(5.0)}};
  const KeyValues run_part = {{"status", "converged"}, {"final_t", format_real(1.5)}};
  write_manifest(dir.str(), config_part, run_part);
  CHECK(fs::exists(dir.path / "manifest.txt"));
  CHECK_FALSE(fs::exists(dir.path / "manifest.txt.tmp"));

  const auto [cfg_kv, run_kv] = read_manifest(dir.str() + "/manifest.txt");
  REQUIRE(cfg_kv.size() == 2);
  CHECK(cfg_kv[0].first == "preset");
  CHECK(cfg_kv[1].second == format_real(5.0));
  CHECK(run_kv.at("status") == "converged");
  CHECK(csv_real(run_kv.at("final_t")) == 1.5);

  // The config half must resolve on its own (run.* lines are inert).
  const auto cfg = resolve_config({cfg_kv});
  CHECK(cfg.alpha == 5.0);
}

TEST_CASE("output directory precedence") {
  ExperimentConfig cfg;
  cfg.out = "/explicit/dir";
  ::setenv("INVSTEER_OUT", "/env/dir", 1);
  CHECK(output_dir(cfg) == "/explicit/dir");
  cfg.out.clear();
  CHECK(output_dir(cfg) == "/env/dir");
  ::unsetenv("INVSTEER_OUT");
  CHECK(output_dir(cfg) == ".");
}

TEST_CASE("a manifest re-run reproduces the run bit for bit") {
  TempDir first, second;
  auto cfg = resolve_config({{{"preset", "lorenz-origin"}, {"t_max", "2.0"}}});
  cfg.out = first.str();
  const SimulateResult a = drive_simulate(cfg);
  REQUIRE_FALSE(a.record.impulses.empty());

  // Re-resolve purely from the manifest on disk, redirect the output, re-run.
  const auto [cfg_kv, run_kv] = read_manifest(first.str() + "/manifest.txt");
  auto cfg2 = resolve_config({cfg_kv});
  cfg2.out = second.str();
  const SimulateResult b = drive_simulate(cfg2);

  CHECK(slurp(first.str() + "/trajectory.csv") == slurp(second.str() + "/trajectory.csv"));
  CHECK(slurp(first.str() + "/impulses.csv") == slurp(second.str() + "/impulses.csv"));
  CHECK(run_kv.at("status") == "horizon");
}

TEST_CASE("a stored run loads back with its impulse counters intact") {
  TempDir dir;
  auto cfg = resolve_config({{{"preset", "lorenz-origin"}, {"t_max", "2.0"}}});
  cfg.out = dir.str();
  const SimulateResult live = drive_simulate(cfg);
  const TrajectoryRecord loaded = load_run_record(dir.str());

  REQUIRE(loaded.samples.size() == live.record.samples.size());
  REQUIRE(loaded.impulses.size() == live.record.impulses.size());
  for (std::size_t i = 0; i < loaded.impulses.size(); ++i) {
    CHECK(loaded.impulses[i].t_n == live.record.impulses[i].t_n);
    CHECK(loaded.impulses[i].B_n == live.record.impulses[i].B_n);
    CHECK(loaded.impulses[i].norm_after == live.record.impulses[i].norm_after);
  }
  for (std::size_t k = 0; k < loaded.samples.size(); ++k) {
    CHECK(loaded.samples[k].t == live.record.samples[k].t);
    CHECK(loaded.samples[k].norm_I == live.record.samples[k].norm_I);
    CHECK(loaded.samples[k].impulses_before == live.record.samples[k].impulses_before);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(loaded.samples[k].x[j] == live.record.samples[k].x[j]);
  }
}

TEST_CASE("the checker runs off a stored directory") {
  TempDir dir;
  auto cfg = resolve_config({{{"preset", "lorenz-origin"}, {"t_max", "2.0"}}});
  cfg.out = dir.str();
  drive_simulate(cfg);
  std::ostringstream report;
  const int code = run_check(dir.str(), report);
  CHECK(code == 0);
  const std::string text = report.str();
  CHECK(text.find("bounded gaps") != std::string::npos);
  CHECK(text.find("exponent budget") != std::string::npos);
  CHECK(text.find("linear rate") != std::string::npos);
  CHECK(text.find("pathwise bound") != std::string::npos);
  // kappa = 3 < alpha = 5: the linear-rate criterion holds.
  CHECK(text.find("linear rate        : guaranteed") != std::string::npos);
  CHECK(text.find(" 0 violations") != std::string::npos);
}

TEST_CASE("epidemic runs write the case table") {
  TempDir dir;
  auto cfg = resolve_config({{{"preset", "seir-measles"}, {"t_max", "0.5"}}});
  cfg.out = dir.str();
  const SimulateResult r = drive_simulate(cfg);
  REQUIRE(fs::exists(dir.path / "cases.csv"));
  const auto rows = read_csv(dir.str() + "/cases.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0][0] == "t_days");
  // Cumulative cases never decrease.
  double prev = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double cum = csv_real(rows[i][1]);
    CHECK(cum >= prev);
    prev = cum;
  }
  // Days column is years * 365.
  CHECK(csv_real(rows.back()[0]) ==
        Catch::Approx(r.record.samples.back().t * kDaysPerYear).epsilon(1e-15));
}
