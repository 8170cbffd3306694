#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpd/config.hpp"
#include "dpd/errors.hpp"
#include "dpd/experiments.hpp"
#include "dpd/meanfield.hpp"
#include "dpd/trajectory.hpp"

namespace dpd {

namespace detail {

// Shortest decimal form that parses back to the same double; deterministic
// across runs (no locale, no wall clock anywhere in the output path).
inline std::string csv_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// snapshots.csv: one row per (snapshot time, particle)
inline void write_snapshots_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out = detail::open_output(path);
  out << "time,particle_id,position,wealth_num,wealth_den,strategy,alive\n";
  for (const Snapshot& snap : traj.snapshots) {
    std::string t = detail::csv_double(snap.time);
    for (std::size_t i = 0; i < snap.particles.size(); ++i) {
      const ParticleState& p = snap.particles[i];
      out << t << ',' << i << ',' << p.position << ',' << p.wealth.num << ',' << p.wealth.den
          << ',' << static_cast<unsigned>(p.strategy) << ',' << (p.alive ? 1 : 0) << '\n';
    }
  }
  detail::finish_output(out, path);
}

// meanfield.csv: one row per (snapshot time, lattice atom with mass), plus a
// dead row per strategy; dead rows use wealth_num="dead".
inline void write_meanfield_csv(const std::filesystem::path& path,
                                const std::vector<MeanFieldState>& states,
                                const LatticeSpec& lat) {
  std::ofstream out = detail::open_output(path);
  out << "time,wealth_num,wealth_den,strategy,mass\n";
  for (const MeanFieldState& s : states) {
    std::string t = detail::csv_double(s.time);
    for (std::size_t z = 0; z < lat.wealth.size(); ++z) {
      for (std::size_t k = 0; k < lat.wealth[z].size(); ++k) {
        double mass = s.alive[z][k];
        if (mass == 0.0) continue;
        out << t << ',' << lat.wealth[z][k] << ',' << lat.q << ',' << z << ','
            << detail::csv_double(mass) << '\n';
      }
      if (s.dead[z] != 0.0)
        out << t << ",dead," << lat.q << ',' << z << ',' << detail::csv_double(s.dead[z]) << '\n';
    }
  }
  detail::finish_output(out, path);
}

// experiment CSV: grid columns, then statistic,stderr,replicas,verdict
inline void write_experiment_csv(const std::filesystem::path& path, const ExperimentReport& rep) {
  std::ofstream out = detail::open_output(path);
  for (const std::string& key : rep.grid_keys) out << key << ',';
  out << "statistic,stderr,replicas,verdict\n";
  for (const ExperimentCell& cell : rep.cells) {
    for (const std::string& c : cell.coords) out << c << ',';
    out << detail::csv_double(cell.statistic) << ','
        << (std::isnan(cell.std_error) ? "nan" : detail::csv_double(cell.std_error)) << ','
        << cell.replicas << ',' << (cell.verdict ? "pass" : "fail") << '\n';
  }
  detail::finish_output(out, path);
}

inline nlohmann::json report_json(const ExperimentReport& rep) {
  nlohmann::json j;
  j["experiment"] = rep.name;
  j["seed"] = rep.seed;
  j["grid_keys"] = rep.grid_keys;
  nlohmann::json cells = nlohmann::json::array();
  for (const ExperimentCell& cell : rep.cells) {
    nlohmann::json c;
    c["coords"] = cell.coords;
    c["statistic"] = cell.statistic;
    if (std::isnan(cell.std_error)) {
      c["stderr"] = nullptr;
    } else {
      c["stderr"] = cell.std_error;
    }
    c["replicas"] = cell.replicas;
    c["verdict"] = cell.verdict ? "pass" : "fail";
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  nlohmann::json checks = nlohmann::json::array();
  for (const ExperimentCheck& check : rep.checks) {
    checks.push_back(
        {{"name", check.name}, {"verdict", check.pass ? "pass" : "fail"}, {"detail", check.detail}});
  }
  j["checks"] = std::move(checks);
  j["verdict"] = rep.passed() ? "pass" : "fail";
  return j;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = detail::open_output(path);
  out << j.dump(2) << '\n';
  detail::finish_output(out, path);
}

struct TruncationInfo {
  double epsilon = 0.0;
  int k_max = 0;
  double tail_budget = 0.0;
  std::size_t lattice_states = 0;
};

// metadata.json: the effective config (defaults applied), which fields came
// from defaults, the seed, tool versions, and the truncation budget if a
// mean-field lattice was built for this run.
inline void write_metadata(const std::filesystem::path& path, const RunConfig& cfg,
                           const std::vector<std::string>& defaults_filled,
                           const TruncationInfo* trunc) {
  nlohmann::json j;
  j["config"] = serialize_config(cfg);
  j["defaults_filled"] = defaults_filled;
  j["seed"] = cfg.seed;
  j["versions"] = {{"dpd", kVersion}, {"schema", kSchemaVersion}};
  if (trunc) {
    j["truncation"] = {{"epsilon", trunc->epsilon},
                       {"k_max", trunc->k_max},
                       {"tail_budget", trunc->tail_budget},
                       {"lattice_states", trunc->lattice_states}};
  } else {
    j["truncation"] = nullptr;
  }
  write_json_file(path, j);
}

}  // namespace dpd
