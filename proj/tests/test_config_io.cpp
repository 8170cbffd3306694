#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpd/cli.hpp"
#include "dpd/config.hpp"
#include "dpd/io.hpp"

using namespace dpd;

namespace {

std::string pd_spatial_text() {
  return R"({
    "engine": "spatial",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 6,
    "graph": {"torus": 3},
    "d": 4.0,
    "lambda": 1.0,
    "horizon": 2.0,
    "snapshots": [0, 1.0, 2.0],
    "initial": {"atoms": [
      {"wealth": [4,1], "strategy": 0, "prob": [1,2]},
      {"wealth": [4,1], "strategy": 1, "prob": [1,2]}
    ]},
    "seed": 42,
    "out": "out_sim"
  })";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dpd_test_" + std::to_string(Catch::rngSeed()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::filesystem::path write_config(const TempDir& dir, const std::string& name,
                                   const std::string& text) {
  std::filesystem::path p = dir.path / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

}  // namespace

TEST_CASE("config round trip is exact", "[config]") {
  std::vector<std::string> defaults;
  RunConfig cfg = parse_config(pd_spatial_text(), &defaults);
  CHECK(cfg.engine == "spatial");
  CHECK(cfg.R == Rational(2));
  CHECK(cfg.graph.has_value());
  CHECK(cfg.graph->torus_m == 3);
  CHECK(cfg.atoms.size() == 2);
  CHECK(cfg.atoms[1].prob == Rational(1, 2));
  CHECK(cfg.seed == 42);

  RunConfig again = parse_config(serialize_config(cfg).dump());
  CHECK(again == cfg);
}

TEST_CASE("general-model config round trip is exact", "[config]") {
  const std::string text = R"({
    "model": "general",
    "engine": "matching",
    "actions": 2,
    "strategies": 2,
    "payoffs": [[[2,1],[-3,1]],[[4,1],[0,1]]],
    "alpha": [[[1,1],[0,1]],[[1,2],[1,2]]],
    "death": [[0,1],[-1,2]],
    "N": 10,
    "lambda": 0.5,
    "slowed": true,
    "horizon": 1.0,
    "initial": {"particles": [
      {"position": 0, "wealth": [3,1], "strategy": 0},
      {"position": 0, "wealth": [3,2], "strategy": 1}
    ]},
    "seed": 9
  })";
  RunConfig cfg = parse_config(text);
  CHECK(cfg.model == "general");
  CHECK(cfg.payoff_matrix[0][1] == Rational(-3));
  CHECK(cfg.death_thresholds[1] == Rational(-1, 2));
  CHECK(cfg.particles[1].wealth == Rational(3, 2));
  CHECK(cfg.n == 10);

  RunConfig again = parse_config(serialize_config(cfg).dump());
  CHECK(again == cfg);
  validate_config(cfg);
}

TEST_CASE("experiment configs round trip with their extra knobs", "[config]") {
  const std::string text = R"({
    "engine": "chaos",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "lambda": 3.0,
    "slowed": true,
    "horizon": 3.0,
    "replicas": 50,
    "grids": {"N": [8, 32]},
    "spot_N": 64,
    "w1_tolerance": 0.05,
    "slope_window": [-1.6, -0.4],
    "f_threshold": [1, 1],
    "ci_z": 2.0,
    "initial": {"atoms": [{"wealth": [2,1], "strategy": 1, "prob": [1,1]}]},
    "seed": 5
  })";
  RunConfig cfg = parse_config(text);
  CHECK(cfg.n_grid == std::vector<std::uint64_t>{8, 32});
  CHECK(cfg.spot_n == 64);
  CHECK(cfg.f_threshold == Rational(1));
  CHECK(cfg.ci_z == 2.0);
  RunConfig again = parse_config(serialize_config(cfg).dump());
  CHECK(again == cfg);
}

TEST_CASE("chaos threshold defaults to half the initial wealth", "[config]") {
  const std::string text = R"({
    "engine": "chaos",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "lambda": 3.0, "slowed": true, "horizon": 3.0, "replicas": 50,
    "grids": {"N": [8, 32]},
    "initial": {"atoms": [{"wealth": [2,1], "strategy": 1, "prob": [1,1]}]}
  })";
  std::vector<std::string> defaults;
  RunConfig cfg = parse_config(text, &defaults);
  REQUIRE(cfg.f_threshold.has_value());
  CHECK(*cfg.f_threshold == Rational(1));
  CHECK(std::find(defaults.begin(), defaults.end(), "f_threshold") != defaults.end());
}

TEST_CASE("config rejections carry the offending field path", "[config]") {
  auto expect_reject = [](const std::string& text, const std::string& needle) {
    try {
      RunConfig cfg = parse_config(text);
      validate_config(cfg);
      FAIL("expected rejection mentioning \"" << needle << "\"");
    } catch (const ConfigError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  // payoff ordering: temptation must beat reward
  expect_reject(R"({
    "engine": "matching",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [2,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0,
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })",
                "payoffs.T");

  // atom probabilities must sum to one
  expect_reject(R"({
    "engine": "matching",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0,
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,2]}]}
  })",
                "initial.atoms");

  // unknown top-level field
  expect_reject(R"({
    "engine": "matching", "speed": 3,
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0,
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })",
                "speed");

  // rationals must be exact integer pairs
  expect_reject(R"({
    "engine": "matching",
    "payoffs": {"R": [2.5,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0,
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })",
                "payoffs.R");

  // initial must pick exactly one representation
  expect_reject(R"({
    "engine": "matching",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0,
    "initial": {}
  })",
                "initial");

  // snapshots outside the horizon
  expect_reject(R"({
    "engine": "matching",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0, "snapshots": [2.0],
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })",
                "snapshots");

  // malformed JSON
  expect_reject("{\"engine\":", "not valid JSON");
}

TEST_CASE("defaults_filled lists exactly the fields the parser chose", "[config]") {
  std::vector<std::string> defaults;
  parse_config(pd_spatial_text(), &defaults);
  std::vector<std::string> expected = {"model", "slowed", "dt", "epsilon", "replicas", "workers"};
  CHECK(defaults == expected);
}

TEST_CASE("csv doubles use the shortest exact representation", "[io]") {
  CHECK(detail::csv_double(0.5) == "0.5");
  CHECK(detail::csv_double(1.0) == "1");
  CHECK(detail::csv_double(0.1) == "0.1");
  CHECK(detail::csv_double(1e-3) == "0.001");
  double third = 1.0 / 3.0;
  std::string s = detail::csv_double(third);
  CHECK(std::strtod(s.c_str(), nullptr) == third);
}

TEST_CASE("snapshot csv has the documented header and one row per particle", "[io]") {
  TempDir dir;
  Trajectory traj;
  traj.horizon = 1.0;
  Snapshot snap;
  snap.time = 0.5;
  ParticleState p;
  p.position = 3;
  p.wealth = Wealth{7, 2};
  p.strategy = 1;
  p.alive = true;
  snap.particles = {p};
  traj.snapshots = {snap};
  write_snapshots_csv(dir.path / "s.csv", traj);
  CHECK(read_file(dir.path / "s.csv") ==
        "time,particle_id,position,wealth_num,wealth_den,strategy,alive\n"
        "0.5,0,3,7,2,1,1\n");
}

TEST_CASE("empty trajectory writes a header-only csv", "[io]") {
  TempDir dir;
  Trajectory traj;
  write_snapshots_csv(dir.path / "s.csv", traj);
  CHECK(read_file(dir.path / "s.csv") ==
        "time,particle_id,position,wealth_num,wealth_den,strategy,alive\n");
}

TEST_CASE("mean-field csv: single atom yields a single data row", "[io]") {
  TempDir dir;
  LatticeSpec lat;
  lat.q = 1;
  lat.wealth = {{1}};
  lat.death_num = {0};
  MeanFieldState s;
  s.alive = {{1.0}};
  s.dead = {0.0};
  s.time = 0.0;
  write_meanfield_csv(dir.path / "m.csv", {s}, lat);
  CHECK(read_file(dir.path / "m.csv") ==
        "time,wealth_num,wealth_den,strategy,mass\n"
        "0,1,1,0,1\n");
}

TEST_CASE("mean-field csv labels dead mass with wealth_num=dead", "[io]") {
  TempDir dir;
  LatticeSpec lat;
  lat.q = 2;
  lat.wealth = {{1, 3}, {2}};
  lat.death_num = {0, 0};
  MeanFieldState s;
  s.alive = {{0.25, 0.0}, {0.5}};
  s.dead = {0.25, 0.0};
  s.time = 1.5;
  write_meanfield_csv(dir.path / "m.csv", {s}, lat);
  CHECK(read_file(dir.path / "m.csv") ==
        "time,wealth_num,wealth_den,strategy,mass\n"
        "1.5,1,2,0,0.25\n"
        "1.5,dead,2,0,0.25\n"
        "1.5,2,2,1,0.5\n");
}

TEST_CASE("experiment csv carries grid columns and verdicts", "[io]") {
  TempDir dir;
  ExperimentReport rep;
  rep.name = "demo";
  rep.grid_keys = {"N", "quantity"};
  rep.cells.push_back({{"8", "cov"}, -0.25, 0.01, 100, true});
  rep.cells.push_back({{"8", "w1"}, 0.5, std::numeric_limits<double>::quiet_NaN(), 100, false});
  write_experiment_csv(dir.path / "e.csv", rep);
  CHECK(read_file(dir.path / "e.csv") ==
        "N,quantity,statistic,stderr,replicas,verdict\n"
        "8,cov,-0.25,0.01,100,pass\n"
        "8,w1,0.5,nan,100,fail\n");
}

TEST_CASE("report json mirrors cells, checks and the overall verdict", "[io]") {
  ExperimentReport rep;
  rep.name = "demo";
  rep.seed = 11;
  rep.grid_keys = {"d"};
  rep.cells.push_back({{"1"}, 0.25, 0.01, 10, true});
  rep.checks.push_back({"trend", true, "ok"});
  nlohmann::json j = report_json(rep);
  CHECK(j["experiment"] == "demo");
  CHECK(j["seed"] == 11);
  CHECK(j["verdict"] == "pass");
  CHECK(j["cells"].size() == 1);
  CHECK(j["cells"][0]["coords"][0] == "1");
  CHECK(j["cells"][0]["statistic"] == 0.25);
  CHECK(j["checks"][0]["name"] == "trend");

  rep.checks.push_back({"bound", false, "busted"});
  CHECK(report_json(rep)["verdict"] == "fail");
}

TEST_CASE("metadata echoes the full config with defaults and versions", "[io]") {
  TempDir dir;
  std::vector<std::string> defaults;
  RunConfig cfg = parse_config(pd_spatial_text(), &defaults);
  TruncationInfo trunc{1e-8, 17, 3.2e-10, 40};
  write_metadata(dir.path / "meta.json", cfg, defaults, &trunc);
  nlohmann::json j = nlohmann::json::parse(read_file(dir.path / "meta.json"));
  CHECK(j["seed"] == 42);
  CHECK(j["versions"]["dpd"] == kVersion);
  CHECK(j["versions"]["schema"] == kSchemaVersion);
  CHECK(j["truncation"]["k_max"] == 17);
  CHECK(j["defaults_filled"].size() == defaults.size());
  // the embedded config must parse back to the same RunConfig
  RunConfig echoed = parse_config(j["config"].dump());
  CHECK(echoed == cfg);

  write_metadata(dir.path / "meta2.json", cfg, defaults, nullptr);
  nlohmann::json j2 = nlohmann::json::parse(read_file(dir.path / "meta2.json"));
  CHECK(j2["truncation"].is_null());
}

TEST_CASE("cli validate accepts a good config and stays quiet on disk", "[cli]") {
  TempDir dir;
  auto cfg_path = write_config(dir, "cfg.json", pd_spatial_text());
  std::ostringstream out, err;
  int rc = run_command({"validate", cfg_path.string()}, out, err);
  CHECK(rc == kExitOk);
  CHECK(out.str().rfind("ok:", 0) == 0);
  CHECK(err.str().empty());
  CHECK_FALSE(std::filesystem::exists(dir.path / "out_sim"));
}

TEST_CASE("cli rejects broken configs with exit 2 and a field path", "[cli]") {
  TempDir dir;
  auto cfg_path = write_config(dir, "bad.json", R"({
    "engine": "matching",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [2,1], "P": [1,1]},
    "N": 4, "lambda": 1.0, "horizon": 1.0,
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })");
  std::ostringstream out, err;
  CHECK(run_command({"validate", cfg_path.string()}, out, err) == kExitConfigError);
  CHECK(err.str().find("payoffs.T") != std::string::npos);

  std::ostringstream out2, err2;
  CHECK(run_command({"simulate", (dir.path / "missing.json").string()}, out2, err2) ==
        kExitConfigError);

  std::ostringstream out3, err3;
  CHECK(run_command({"notacommand"}, out3, err3) == kExitConfigError);
}

TEST_CASE("cli simulate writes byte-identical outputs for the same seed", "[cli]") {
  TempDir dir;
  auto cfg_path = write_config(dir, "cfg.json", pd_spatial_text());
  std::ostringstream o1, o2, e;
  std::string out_a = (dir.path / "a").string();
  std::string out_b = (dir.path / "b").string();
  REQUIRE(run_command({"simulate", cfg_path.string(), "--out", out_a}, o1, e) == kExitOk);
  REQUIRE(run_command({"simulate", cfg_path.string(), "--out", out_b}, o2, e) == kExitOk);
  CHECK(read_file(dir.path / "a" / "snapshots.csv") == read_file(dir.path / "b" / "snapshots.csv"));

  // a different seed must change the trajectory
  std::ostringstream o3;
  std::string out_c = (dir.path / "c").string();
  REQUIRE(run_command({"simulate", cfg_path.string(), "--seed", "99", "--out", out_c}, o3, e) ==
          kExitOk);
  CHECK(read_file(dir.path / "a" / "snapshots.csv") != read_file(dir.path / "c" / "snapshots.csv"));
  nlohmann::json meta = nlohmann::json::parse(read_file(dir.path / "c" / "metadata.json"));
  CHECK(meta["seed"] == 99);
  CHECK(meta["config"]["seed"] == 99);
}

TEST_CASE("cli solve writes the mean-field csv and truncation metadata", "[cli]") {
  TempDir dir;
  auto cfg_path = write_config(dir, "mf.json", R"({
    "engine": "meanfield",
    "payoffs": {"R": [1,1], "S": [2,1], "T": [2,1], "P": [1,1]},
    "lambda": 1.0, "horizon": 1.0, "epsilon": 1e-8,
    "snapshots": [1.0],
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })");
  std::ostringstream out, err;
  std::string out_dir = (dir.path / "mf_out").string();
  REQUIRE(run_command({"solve", cfg_path.string(), "--out", out_dir}, out, err) == kExitOk);
  std::string csv = read_file(dir.path / "mf_out" / "meanfield.csv");
  CHECK(csv.rfind("time,wealth_num,wealth_den,strategy,mass\n", 0) == 0);
  // all-C at rate 1 for time 1: wealth-1 mass is exp(-1)
  CHECK(csv.find("1,1,1,0,0.36787944117144") != std::string::npos);
  nlohmann::json meta = nlohmann::json::parse(read_file(dir.path / "mf_out" / "metadata.json"));
  CHECK(meta["truncation"]["epsilon"] == 1e-8);
  CHECK(meta["truncation"]["k_max"].get<int>() > 0);
}

TEST_CASE("cli experiment exits 0 on pass and writes a report", "[cli]") {
  TempDir dir;
  // single-site torus: every placement is the whole torus, error is exactly 0
  auto cfg_path = write_config(dir, "occ.json", R"({
    "engine": "occupation",
    "graph": {"torus": 1},
    "d": 1.0, "horizon": 10.0,
    "initial": {"atoms": [{"wealth": [1,1], "strategy": 0, "prob": [1,1]}]}
  })");
  std::ostringstream out, err;
  std::string out_dir = (dir.path / "occ_out").string();
  REQUIRE(run_command({"experiment", cfg_path.string(), "--out", out_dir}, out, err) == kExitOk);
  nlohmann::json report = nlohmann::json::parse(read_file(dir.path / "occ_out" / "report.json"));
  CHECK(report["experiment"] == "occupation");
  CHECK(report["verdict"] == "pass");
  CHECK(std::filesystem::exists(dir.path / "occ_out" / "occupation.csv"));
  CHECK(std::filesystem::exists(dir.path / "occ_out" / "metadata.json"));
}

TEST_CASE("cli homogenization on a one-site torus passes end to end", "[cli]") {
  TempDir dir;
  // one site: movement does nothing, so every cell reproduces random matching
  // and the trend verdicts must hold
  auto cfg_path = write_config(dir, "hom.json", R"({
    "engine": "homogenization",
    "payoffs": {"R": [2,1], "S": [3,1], "T": [4,1], "P": [1,1]},
    "N": 4,
    "graph": {"torus": 1},
    "lambda": 1.0, "horizon": 3.0, "replicas": 60,
    "grids": {"d": [1.0, 8.0]},
    "initial": {"atoms": [
      {"wealth": [4,1], "strategy": 0, "prob": [1,2]},
      {"wealth": [4,1], "strategy": 1, "prob": [1,2]}]},
    "seed": 3
  })");
  std::ostringstream out, err;
  std::string out_dir = (dir.path / "hom_out").string();
  int rc = run_command({"experiment", cfg_path.string(), "--out", out_dir}, out, err);
  INFO(err.str());
  CHECK(rc == kExitOk);
  std::string csv = read_file(dir.path / "hom_out" / "homogenization.csv");
  CHECK(csv.rfind("d,statistic,stderr,replicas,verdict\n", 0) == 0);
  nlohmann::json report = nlohmann::json::parse(read_file(dir.path / "hom_out" / "report.json"));
  CHECK(report["verdict"] == "pass");
  CHECK(report["cells"].size() == 3);  // two d cells plus the self-distance reference
}

TEST_CASE("cli maps unwritable output directories to exit 3", "[cli]") {
  TempDir dir;
  auto cfg_path = write_config(dir, "cfg.json", pd_spatial_text());
  // a regular file where the directory should go
  std::ofstream(dir.path / "blocked") << "x";
  std::ostringstream out, err;
  int rc = run_command({"simulate", cfg_path.string(), "--out", (dir.path / "blocked").string()},
                       out, err);
  CHECK(rc == kExitIoError);
  CHECK(err.str().find("io error") != std::string::npos);
}
