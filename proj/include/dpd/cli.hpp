#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpd/config.hpp"
#include "dpd/io.hpp"
#include "dpd/matching.hpp"
#include "dpd/meanfield.hpp"
#include "dpd/spatial.hpp"

namespace dpd {

namespace detail {

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> workers;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Flags beat the environment, which beats the config file.
inline void apply_overrides(RunConfig& cfg, const CliOverrides& ov) {
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.workers) {
    cfg.workers = *ov.workers;
  } else if (std::getenv(kWorkersEnvVar)) {
    cfg.workers = resolve_worker_count(0);
  }
}

inline std::vector<double> sorted_snapshots(const RunConfig& cfg) {
  std::vector<double> times = cfg.snapshot_times;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

inline int dispatch_simulate(const RunConfig& cfg, const std::vector<std::string>& defaults,
                             std::ostream& out) {
  if (cfg.engine != "spatial" && cfg.engine != "matching")
    throw ConfigError("engine: simulate expects \"spatial\" or \"matching\", got \"" + cfg.engine +
                      "\"");
  GameSpec game = make_game_spec(cfg);
  std::vector<double> times = sorted_snapshots(cfg);
  Trajectory traj;
  if (cfg.engine == "spatial") {
    Graph graph = make_run_graph(cfg);
    std::uint32_t torus_m = cfg.graph->torus_m;
    SpatialSystem sys =
        cfg.particles.empty()
            ? init_spatial(graph, torus_m, game, cfg.d, cfg.lambda, cfg.n,
                           make_atoms(cfg, game), cfg.seed)
            : init_spatial(graph, torus_m, game, cfg.d, cfg.lambda, make_particles(cfg, game),
                           cfg.seed);
    traj = run(sys, cfg.horizon, times);
  } else {
    MatchingSystem sys = cfg.particles.empty()
                             ? init_matching(game, cfg.n, cfg.lambda, cfg.slowed,
                                             make_atoms(cfg, game), cfg.seed)
                             : init_matching(game, cfg.lambda, cfg.slowed,
                                             make_particles(cfg, game), cfg.seed);
    traj = run_matching(sys, cfg.horizon, times);
  }
  std::filesystem::path dir(cfg.out_dir);
  ensure_directory(dir);
  write_snapshots_csv(dir / "snapshots.csv", traj);
  write_metadata(dir / "metadata.json", cfg, defaults, nullptr);
  std::size_t alive = 0;
  const std::vector<ParticleState>& final_state = traj.snapshots.back().particles;
  for (const ParticleState& p : final_state) alive += p.alive ? 1 : 0;
  out << "simulate: engine=" << cfg.engine << " horizon=" << detail::csv_double(cfg.horizon)
      << " events=" << (traj.counts.moves + traj.counts.games()) << " alive=" << alive << "/"
      << final_state.size() << " -> " << (dir / "snapshots.csv").string() << "\n";
  return kExitOk;
}

inline int dispatch_solve(const RunConfig& cfg, const std::vector<std::string>& defaults,
                          std::ostream& out) {
  if (cfg.engine != "meanfield")
    throw ConfigError("engine: solve expects \"meanfield\", got \"" + cfg.engine + "\"");
  GameSpec game = make_game_spec(cfg);
  std::vector<InitAtom> atoms = make_atoms(cfg, game);
  LatticeSpec lat = build_lattice(atoms, game, cfg.horizon, cfg.lambda, cfg.epsilon);
  MeanFieldState state = initial_state(lat, game, atoms);
  DriftFn f = make_drift(lat, game, cfg.lambda);
  std::vector<double> times = sorted_snapshots(cfg);
  if (times.empty()) times = {cfg.horizon};
  std::vector<MeanFieldState> states = integrate(state, cfg.horizon, cfg.dt, times, f);
  std::filesystem::path dir(cfg.out_dir);
  ensure_directory(dir);
  write_meanfield_csv(dir / "meanfield.csv", states, lat);
  std::size_t n_states = 0;
  for (const auto& w : lat.wealth) n_states += w.size();
  TruncationInfo trunc{cfg.epsilon, lat.k_max, lat.tail_budget, n_states};
  write_metadata(dir / "metadata.json", cfg, defaults, &trunc);
  double alive = 0.0;
  for (std::size_t z = 0; z < lat.wealth.size(); ++z)
    alive += alive_mass(states.back(), static_cast<int>(z));
  out << "solve: horizon=" << detail::csv_double(cfg.horizon)
      << " lattice_states=" << n_states << " k_max=" << lat.k_max
      << " final_alive_mass=" << detail::csv_double(alive) << " -> "
      << (dir / "meanfield.csv").string() << "\n";
  return kExitOk;
}

inline int dispatch_experiment(const RunConfig& cfg, const std::vector<std::string>& defaults,
                               std::ostream& out) {
  ExperimentReport rep;
  std::optional<TruncationInfo> trunc;
  if (cfg.engine == "homogenization") {
    rep = homogenization_experiment(make_homogenization_config(cfg));
  } else if (cfg.engine == "chaos") {
    ChaosConfig cc = make_chaos_config(cfg);
    LatticeSpec lat = build_lattice(cc.atoms, cc.game, cc.horizon, cc.lambda_m, cc.epsilon);
    std::size_t n_states = 0;
    for (const auto& w : lat.wealth) n_states += w.size();
    trunc = TruncationInfo{cc.epsilon, lat.k_max, lat.tail_budget, n_states};
    rep = chaos_experiment(cc);
  } else if (cfg.engine == "occupation") {
    rep = occupation_experiment(make_occupation_config(cfg));
  } else {
    throw ConfigError("engine: experiment expects \"homogenization\", \"chaos\" or "
                      "\"occupation\", got \"" +
                      cfg.engine + "\"");
  }
  std::filesystem::path dir(cfg.out_dir);
  ensure_directory(dir);
  write_experiment_csv(dir / (rep.name + ".csv"), rep);
  write_json_file(dir / "report.json", report_json(rep));
  write_metadata(dir / "metadata.json", cfg, defaults, trunc ? &*trunc : nullptr);
  bool pass = rep.passed();
  out << "experiment " << rep.name << ": cells=" << rep.cells.size()
      << " checks=" << rep.checks.size() << " verdict=" << (pass ? "pass" : "fail") << " -> "
      << (dir / (rep.name + ".csv")).string() << "\n";
  return pass ? kExitOk : kExitVerdictFailure;
}

inline int dispatch_validate(const RunConfig& cfg, std::ostream& out) {
  out << "ok: engine=" << cfg.engine << " model=" << cfg.model;
  if (cfg.n > 0) out << " N=" << cfg.n;
  if (cfg.horizon > 0) out << " horizon=" << detail::csv_double(cfg.horizon);
  out << "\n";
  return kExitOk;
}

}  // namespace detail

// Entry point shared by the binary and the tests. args excludes the program
// name, e.g. {"simulate", "cfg.json", "--seed", "7"}.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"exact simulator for a spatial game-driven wealth process, its random-matching "
               "reduction, and its mean-field limit"};
  app.name("dpd");
  app.require_subcommand(1);
  std::string config_path;
  detail::CliOverrides overrides;
  std::uint64_t seed_value = 0;
  std::string out_value;
  std::uint64_t workers_value = 0;
  struct SubOpts {
    CLI::App* cmd;
    CLI::Option* seed;
    CLI::Option* out;
    CLI::Option* workers;
  };
  std::vector<SubOpts> subs;
  auto add_sub = [&](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("config", config_path, "JSON configuration file")->required();
    SubOpts o;
    o.cmd = s;
    o.seed = s->add_option("--seed", seed_value, "override the RNG seed");
    o.out = s->add_option("--out", out_value, "override the output directory");
    o.workers = s->add_option("--workers", workers_value, "override the worker-thread count");
    subs.push_back(o);
    return s;
  };
  add_sub("simulate", "run one particle-system trajectory and write snapshots.csv");
  add_sub("solve", "integrate the mean-field equations and write meanfield.csv");
  add_sub("experiment", "run a convergence experiment and write its report");
  add_sub("validate", "check a configuration file and exit");

  std::vector<const char*> argv;
  argv.push_back("dpd");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfigError;
  }

  std::string sub_name;
  for (const SubOpts& s : subs) {
    if (s.cmd->parsed()) {
      sub_name = s.cmd->get_name();
      if (s.seed->count() > 0) overrides.seed = seed_value;
      if (s.out->count() > 0) overrides.out = out_value;
      if (s.workers->count() > 0) overrides.workers = workers_value;
    }
  }

  try {
    std::vector<std::string> defaults;
    RunConfig cfg = parse_config(detail::read_text_file(config_path), &defaults);
    detail::apply_overrides(cfg, overrides);
    validate_config(cfg);
    if (sub_name == "validate") return detail::dispatch_validate(cfg, out);
    if (sub_name == "simulate") return detail::dispatch_simulate(cfg, defaults, out);
    if (sub_name == "solve") return detail::dispatch_solve(cfg, defaults, out);
    return detail::dispatch_experiment(cfg, defaults, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const UsageError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IntegrationError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ArithmeticError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitIoError;
  }
}

}  // namespace dpd
