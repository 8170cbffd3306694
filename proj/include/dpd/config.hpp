#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpd/errors.hpp"
#include "dpd/experiments.hpp"
#include "dpd/game.hpp"
#include "dpd/graph.hpp"
#include "dpd/rational.hpp"

namespace dpd {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

struct AtomConfig {
  Rational wealth{0, 1};
  std::uint32_t strategy = 0;
  Rational prob{0, 1};
  bool operator==(const AtomConfig&) const = default;
};

struct ParticleConfig {
  std::uint32_t position = 0;
  Rational wealth{0, 1};
  std::uint32_t strategy = 0;
  bool operator==(const ParticleConfig&) const = default;
};

struct GraphConfig {
  std::uint32_t torus_m = 0;  // nonzero: torus of side m; zero: explicit edge list
  std::uint32_t vertices = 0;
  std::vector<std::array<std::uint32_t, 2>> edges;
  bool operator==(const GraphConfig&) const = default;
};

struct RunConfig {
  std::string model = "pd";  // "pd" | "general"
  std::string engine;        // spatial | matching | meanfield | homogenization | chaos | occupation

  // prisoner's dilemma payoffs
  Rational R{0, 1}, S{0, 1}, T{0, 1}, P{0, 1};

  // general game (model == "general")
  std::uint32_t actions = 0;
  std::uint32_t strategies = 0;
  std::vector<std::vector<Rational>> payoff_matrix;    // actions x actions
  std::vector<std::vector<Rational>> alpha;            // strategies x actions
  std::vector<Rational> death_thresholds;              // per strategy

  std::uint32_t n = 0;
  std::optional<GraphConfig> graph;
  double d = 0.0;
  double lambda = 0.0;  // spatial: per co-located pair; matching/meanfield: homogenized pair rate
  bool slowed = false;
  double horizon = 0.0;
  double dt = 1e-3;
  double epsilon = 1e-8;
  std::vector<double> snapshot_times;
  std::vector<AtomConfig> atoms;
  std::vector<ParticleConfig> particles;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1;

  // experiment grids and thresholds
  std::vector<double> d_grid;
  std::vector<std::uint64_t> n_grid;
  std::vector<std::vector<std::uint32_t>> site_sets;
  double tolerance = 0.02;      // occupation bound
  double w1_tolerance = 0.05;   // chaos spot bound
  std::optional<Rational> f_threshold;
  std::uint64_t spot_n = 0;
  double slope_lo = -1.6;
  double slope_hi = -0.4;
  double ci_z = 1.96;

  std::string out_dir = "out";
  std::uint64_t workers = 0;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

inline const json& require_field(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) config_fail(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

inline std::int64_t as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) config_fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t as_uint(const json& j, const std::string& path) {
  std::int64_t v = as_int(j, path);
  if (v < 0) config_fail(path, "expected a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

inline double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

inline bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) config_fail(path, "expected a boolean");
  return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_fail(path, "expected a string");
  return j.get<std::string>();
}

// Rationals travel as exact [numerator, denominator] integer pairs.
inline Rational as_rational(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) config_fail(path, "expected [numerator, denominator]");
  std::int64_t num = as_int(j[0], path + "[0]");
  std::int64_t den = as_int(j[1], path + "[1]");
  if (den == 0) config_fail(path, "denominator must be nonzero");
  return Rational{num, den};
}

inline json rational_json(const Rational& r) { return json::array({r.num(), r.den()}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

inline RunConfig parse_config_json(const nlohmann::json& root,
                                   std::vector<std::string>* defaults_filled = nullptr) {
  using detail::as_bool;
  using detail::as_double;
  using detail::as_int;
  using detail::as_rational;
  using detail::as_string;
  using detail::as_uint;
  using detail::config_fail;
  using detail::require_field;
  using nlohmann::json;

  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig cfg;
  auto note_default = [&](const char* field) {
    if (defaults_filled) defaults_filled->push_back(field);
  };
  auto opt = [&](const char* key) -> const json* {
    auto it = root.find(key);
    return it == root.end() || it->is_null() ? nullptr : &*it;
  };

  static const std::vector<std::string> known = {
      "model",      "engine",       "payoffs",       "actions",    "strategies",
      "alpha",      "death",        "N",             "graph",      "d",
      "lambda",     "slowed",       "horizon",       "dt",         "epsilon",
      "snapshots",  "initial",      "seed",          "replicas",   "grids",
      "tolerance",  "w1_tolerance", "f_threshold",   "spot_N",     "slope_window",
      "ci_z",       "out",          "workers"};
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      config_fail(it.key(), "unknown field");
  }

  if (const json* j = opt("model")) {
    cfg.model = as_string(*j, "model");
    if (cfg.model != "pd" && cfg.model != "general")
      config_fail("model", "expected \"pd\" or \"general\"");
  } else {
    note_default("model");
  }
  cfg.engine = as_string(require_field(root, "", "engine"), "engine");
  static const std::vector<std::string> engines = {"spatial",        "matching",
                                                   "meanfield",      "homogenization",
                                                   "chaos",          "occupation"};
  if (std::find(engines.begin(), engines.end(), cfg.engine) == engines.end())
    config_fail("engine", "unknown engine \"" + cfg.engine + "\"");

  if (cfg.model == "pd") {
    if (cfg.engine != "occupation") {
      const json& p = require_field(root, "", "payoffs");
      if (!p.is_object()) config_fail("payoffs", "expected an object with R, S, T, P");
      cfg.R = as_rational(require_field(p, "payoffs", "R"), "payoffs.R");
      cfg.S = as_rational(require_field(p, "payoffs", "S"), "payoffs.S");
      cfg.T = as_rational(require_field(p, "payoffs", "T"), "payoffs.T");
      cfg.P = as_rational(require_field(p, "payoffs", "P"), "payoffs.P");
    }
  } else {
    cfg.actions = static_cast<std::uint32_t>(as_uint(require_field(root, "", "actions"), "actions"));
    cfg.strategies =
        static_cast<std::uint32_t>(as_uint(require_field(root, "", "strategies"), "strategies"));
    const json& pm = require_field(root, "", "payoffs");
    if (!pm.is_array() || pm.size() != cfg.actions)
      config_fail("payoffs", "expected an actions x actions matrix of rationals");
    for (std::size_t b = 0; b < pm.size(); ++b) {
      const json& row = pm[b];
      std::string rp = "payoffs[" + std::to_string(b) + "]";
      if (!row.is_array() || row.size() != cfg.actions) config_fail(rp, "expected a row of rationals");
      std::vector<Rational> out;
      for (std::size_t c = 0; c < row.size(); ++c)
        out.push_back(as_rational(row[c], rp + "[" + std::to_string(c) + "]"));
      cfg.payoff_matrix.push_back(std::move(out));
    }
    const json& al = require_field(root, "", "alpha");
    if (!al.is_array() || al.size() != cfg.strategies)
      config_fail("alpha", "expected one action-distribution per strategy");
    for (std::size_t l = 0; l < al.size(); ++l) {
      const json& row = al[l];
      std::string rp = "alpha[" + std::to_string(l) + "]";
      if (!row.is_array() || row.size() != cfg.actions)
        config_fail(rp, "expected one probability per action");
      std::vector<Rational> out;
      for (std::size_t c = 0; c < row.size(); ++c)
        out.push_back(as_rational(row[c], rp + "[" + std::to_string(c) + "]"));
      cfg.alpha.push_back(std::move(out));
    }
    const json& de = require_field(root, "", "death");
    if (!de.is_array() || de.size() != cfg.strategies)
      config_fail("death", "expected one threshold per strategy");
    for (std::size_t l = 0; l < de.size(); ++l)
      cfg.death_thresholds.push_back(as_rational(de[l], "death[" + std::to_string(l) + "]"));
  }

  if (const json* j = opt("N")) cfg.n = static_cast<std::uint32_t>(as_uint(*j, "N"));
  if (const json* j = opt("graph")) {
    GraphConfig g;
    if (!j->is_object()) config_fail("graph", "expected {\"torus\": m} or a vertex/edge object");
    if (j->contains("torus")) {
      g.torus_m = static_cast<std::uint32_t>(as_uint((*j)["torus"], "graph.torus"));
      if (g.torus_m == 0) config_fail("graph.torus", "side length must be positive");
      g.vertices = g.torus_m * g.torus_m;
    } else {
      g.vertices = static_cast<std::uint32_t>(
          as_uint(require_field(*j, "graph", "vertices"), "graph.vertices"));
      const json& es = require_field(*j, "graph", "edges");
      if (!es.is_array()) config_fail("graph.edges", "expected an array of [a, b] pairs");
      for (std::size_t e = 0; e < es.size(); ++e) {
        std::string ep = "graph.edges[" + std::to_string(e) + "]";
        if (!es[e].is_array() || es[e].size() != 2) config_fail(ep, "expected [a, b]");
        g.edges.push_back({static_cast<std::uint32_t>(as_uint(es[e][0], ep + "[0]")),
                           static_cast<std::uint32_t>(as_uint(es[e][1], ep + "[1]"))});
      }
    }
    cfg.graph = g;
  }
  if (const json* j = opt("d")) {
    cfg.d = as_double(*j, "d");
    if (cfg.d < 0) config_fail("d", "move rate must be nonnegative");
  }
  if (const json* j = opt("lambda")) {
    cfg.lambda = as_double(*j, "lambda");
    if (cfg.lambda < 0) config_fail("lambda", "game rate must be nonnegative");
  }
  if (const json* j = opt("slowed")) {
    cfg.slowed = as_bool(*j, "slowed");
  } else {
    note_default("slowed");
  }
  if (const json* j = opt("horizon")) {
    cfg.horizon = as_double(*j, "horizon");
    if (cfg.horizon < 0) config_fail("horizon", "must be nonnegative");
  }
  if (const json* j = opt("dt")) {
    cfg.dt = as_double(*j, "dt");
    if (!(cfg.dt > 0)) config_fail("dt", "step size must be positive");
  } else {
    note_default("dt");
  }
  if (const json* j = opt("epsilon")) {
    cfg.epsilon = as_double(*j, "epsilon");
    if (!(cfg.epsilon > 0)) config_fail("epsilon", "truncation budget must be positive");
  } else {
    note_default("epsilon");
  }
  if (const json* j = opt("snapshots")) {
    if (!j->is_array()) config_fail("snapshots", "expected an array of times");
    for (std::size_t i = 0; i < j->size(); ++i)
      cfg.snapshot_times.push_back(as_double((*j)[i], "snapshots[" + std::to_string(i) + "]"));
  } else if (cfg.horizon > 0) {
    cfg.snapshot_times = {cfg.horizon};
    note_default("snapshots");
  }

  const json& init = require_field(root, "", "initial");
  if (!init.is_object() || (init.contains("atoms") == init.contains("particles")))
    throw ConfigError("initial: expected exactly one of \"atoms\" or \"particles\"");
  if (init.contains("atoms")) {
    const json& atoms = init["atoms"];
    if (!atoms.is_array() || atoms.empty()) config_fail("initial.atoms", "expected a non-empty array");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      std::string ap = "initial.atoms[" + std::to_string(i) + "]";
      const json& a = atoms[i];
      if (!a.is_object()) config_fail(ap, "expected an object");
      AtomConfig atom;
      atom.wealth = as_rational(require_field(a, ap, "wealth"), ap + ".wealth");
      atom.strategy =
          static_cast<std::uint32_t>(as_uint(require_field(a, ap, "strategy"), ap + ".strategy"));
      atom.prob = as_rational(require_field(a, ap, "prob"), ap + ".prob");
      cfg.atoms.push_back(atom);
    }
  } else {
    const json& ps = init["particles"];
    if (!ps.is_array() || ps.empty())
      config_fail("initial.particles", "expected a non-empty array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      std::string pp = "initial.particles[" + std::to_string(i) + "]";
      const json& p = ps[i];
      if (!p.is_object()) config_fail(pp, "expected an object");
      ParticleConfig pc;
      if (p.contains("position"))
        pc.position = static_cast<std::uint32_t>(as_uint(p["position"], pp + ".position"));
      pc.wealth = as_rational(require_field(p, pp, "wealth"), pp + ".wealth");
      pc.strategy =
          static_cast<std::uint32_t>(as_uint(require_field(p, pp, "strategy"), pp + ".strategy"));
      cfg.particles.push_back(pc);
    }
    if (cfg.n == 0) cfg.n = static_cast<std::uint32_t>(cfg.particles.size());
  }

  if (const json* j = opt("seed")) {
    cfg.seed = as_uint(*j, "seed");
  } else {
    note_default("seed");
  }
  if (const json* j = opt("replicas")) {
    cfg.replicas = as_uint(*j, "replicas");
    if (cfg.replicas == 0) config_fail("replicas", "must be positive");
  } else {
    note_default("replicas");
  }

  if (const json* j = opt("grids")) {
    if (!j->is_object()) config_fail("grids", "expected an object");
    if (j->contains("d")) {
      const json& g = (*j)["d"];
      if (!g.is_array()) config_fail("grids.d", "expected an array of move rates");
      for (std::size_t i = 0; i < g.size(); ++i)
        cfg.d_grid.push_back(as_double(g[i], "grids.d[" + std::to_string(i) + "]"));
    }
    if (j->contains("N")) {
      const json& g = (*j)["N"];
      if (!g.is_array()) config_fail("grids.N", "expected an array of population sizes");
      for (std::size_t i = 0; i < g.size(); ++i)
        cfg.n_grid.push_back(as_uint(g[i], "grids.N[" + std::to_string(i) + "]"));
    }
    if (j->contains("sites")) {
      const json& g = (*j)["sites"];
      if (!g.is_array()) config_fail("grids.sites", "expected an array of vertex sets");
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::string sp = "grids.sites[" + std::to_string(i) + "]";
        if (!g[i].is_array()) config_fail(sp, "expected an array of vertices");
        std::vector<std::uint32_t> set;
        for (std::size_t v = 0; v < g[i].size(); ++v)
          set.push_back(
              static_cast<std::uint32_t>(as_uint(g[i][v], sp + "[" + std::to_string(v) + "]")));
        cfg.site_sets.push_back(std::move(set));
      }
    }
  }

  if (const json* j = opt("tolerance")) {
    cfg.tolerance = as_double(*j, "tolerance");
    if (!(cfg.tolerance > 0)) config_fail("tolerance", "must be positive");
  } else if (cfg.engine == "occupation") {
    note_default("tolerance");
  }
  if (const json* j = opt("w1_tolerance")) {
    cfg.w1_tolerance = as_double(*j, "w1_tolerance");
    if (!(cfg.w1_tolerance > 0)) config_fail("w1_tolerance", "must be positive");
  } else if (cfg.engine == "chaos") {
    note_default("w1_tolerance");
  }
  if (const json* j = opt("f_threshold")) {
    cfg.f_threshold = as_rational(*j, "f_threshold");
  } else if (cfg.engine == "chaos") {
    // default test functional: indicator {wealth > w0 / 2}
    for (const AtomConfig& a : cfg.atoms)
      if (!(a.wealth == cfg.atoms.front().wealth))
        config_fail("f_threshold",
                    "required when initial atoms carry more than one wealth value");
    if (cfg.atoms.empty()) config_fail("f_threshold", "required with explicit particles");
    cfg.f_threshold = cfg.atoms.front().wealth / Rational{2, 1};
    note_default("f_threshold");
  }
  if (const json* j = opt("spot_N")) {
    cfg.spot_n = as_uint(*j, "spot_N");
  } else if (cfg.engine == "chaos") {
    note_default("spot_N");
  }
  if (const json* j = opt("slope_window")) {
    if (!j->is_array() || j->size() != 2) config_fail("slope_window", "expected [low, high]");
    cfg.slope_lo = as_double((*j)[0], "slope_window[0]");
    cfg.slope_hi = as_double((*j)[1], "slope_window[1]");
    if (!(cfg.slope_lo < cfg.slope_hi)) config_fail("slope_window", "low must be below high");
  } else if (cfg.engine == "chaos") {
    note_default("slope_window");
  }
  if (const json* j = opt("ci_z")) {
    cfg.ci_z = as_double(*j, "ci_z");
    if (!(cfg.ci_z > 0)) config_fail("ci_z", "must be positive");
  } else if (cfg.engine == "homogenization" || cfg.engine == "chaos") {
    note_default("ci_z");
  }
  if (const json* j = opt("out")) {
    cfg.out_dir = as_string(*j, "out");
  } else {
    note_default("out");
  }
  if (const json* j = opt("workers")) {
    cfg.workers = as_uint(*j, "workers");
  } else {
    note_default("workers");
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text,
                              std::vector<std::string>* defaults_filled = nullptr) {
  nlohmann::json root = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) throw ConfigError("config: not valid JSON");
  return parse_config_json(root, defaults_filled);
}

// ---------------------------------------------------------------------------
// Serialization (exact round trip: parse(serialize(cfg)) == cfg)
// ---------------------------------------------------------------------------

inline nlohmann::json serialize_config(const RunConfig& cfg) {
  using detail::rational_json;
  using nlohmann::json;
  json j;
  j["model"] = cfg.model;
  j["engine"] = cfg.engine;
  if (cfg.model == "pd") {
    if (cfg.engine != "occupation") {
      j["payoffs"] = {{"R", rational_json(cfg.R)},
                      {"S", rational_json(cfg.S)},
                      {"T", rational_json(cfg.T)},
                      {"P", rational_json(cfg.P)}};
    }
  } else {
    j["actions"] = cfg.actions;
    j["strategies"] = cfg.strategies;
    json pm = json::array();
    for (const auto& row : cfg.payoff_matrix) {
      json r = json::array();
      for (const auto& v : row) r.push_back(rational_json(v));
      pm.push_back(std::move(r));
    }
    j["payoffs"] = std::move(pm);
    json al = json::array();
    for (const auto& row : cfg.alpha) {
      json r = json::array();
      for (const auto& v : row) r.push_back(rational_json(v));
      al.push_back(std::move(r));
    }
    j["alpha"] = std::move(al);
    json de = json::array();
    for (const auto& v : cfg.death_thresholds) de.push_back(rational_json(v));
    j["death"] = std::move(de);
  }
  if (cfg.n > 0) j["N"] = cfg.n;
  if (cfg.graph) {
    if (cfg.graph->torus_m > 0) {
      j["graph"] = {{"torus", cfg.graph->torus_m}};
    } else {
      json es = json::array();
      for (const auto& e : cfg.graph->edges) es.push_back({e[0], e[1]});
      j["graph"] = {{"vertices", cfg.graph->vertices}, {"edges", std::move(es)}};
    }
  }
  if (cfg.d != 0.0) j["d"] = cfg.d;
  if (cfg.lambda != 0.0) j["lambda"] = cfg.lambda;
  j["slowed"] = cfg.slowed;
  if (cfg.horizon != 0.0) j["horizon"] = cfg.horizon;
  j["dt"] = cfg.dt;
  j["epsilon"] = cfg.epsilon;
  if (!cfg.snapshot_times.empty()) j["snapshots"] = cfg.snapshot_times;
  json init;
  if (!cfg.atoms.empty()) {
    json atoms = json::array();
    for (const auto& a : cfg.atoms)
      atoms.push_back({{"wealth", rational_json(a.wealth)},
                       {"strategy", a.strategy},
                       {"prob", rational_json(a.prob)}});
    init["atoms"] = std::move(atoms);
  } else {
    json ps = json::array();
    for (const auto& p : cfg.particles)
      ps.push_back({{"position", p.position},
                    {"wealth", rational_json(p.wealth)},
                    {"strategy", p.strategy}});
    init["particles"] = std::move(ps);
  }
  j["initial"] = std::move(init);
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  json grids;
  if (!cfg.d_grid.empty()) grids["d"] = cfg.d_grid;
  if (!cfg.n_grid.empty()) grids["N"] = cfg.n_grid;
  if (!cfg.site_sets.empty()) grids["sites"] = cfg.site_sets;
  if (!grids.is_null()) j["grids"] = std::move(grids);
  if (cfg.engine == "occupation") j["tolerance"] = cfg.tolerance;
  if (cfg.engine == "chaos") {
    j["w1_tolerance"] = cfg.w1_tolerance;
    if (cfg.f_threshold) j["f_threshold"] = rational_json(*cfg.f_threshold);
    j["spot_N"] = cfg.spot_n;
    j["slope_window"] = {cfg.slope_lo, cfg.slope_hi};
  }
  if (cfg.engine == "homogenization" || cfg.engine == "chaos") j["ci_z"] = cfg.ci_z;
  j["out"] = cfg.out_dir;
  j["workers"] = cfg.workers;
  return j;
}

// ---------------------------------------------------------------------------
// Builders: RunConfig -> engine inputs
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t config_lattice_denominator(const RunConfig& cfg) {
  std::int64_t q = 1;
  auto fold = [&](const Rational& r) { q = lcm64(q, r.den()); };
  if (cfg.model == "pd") {
    if (cfg.engine != "occupation") {
      fold(cfg.R);
      fold(cfg.S);
      fold(cfg.T);
      fold(cfg.P);
    }
  } else {
    for (const auto& row : cfg.payoff_matrix)
      for (const auto& v : row) fold(v);
    for (const auto& v : cfg.death_thresholds) fold(v);
  }
  for (const auto& a : cfg.atoms) fold(a.wealth);
  for (const auto& p : cfg.particles) fold(p.wealth);
  if (cfg.f_threshold) fold(*cfg.f_threshold);
  return q;
}

}  // namespace detail

inline GameSpec make_game_spec(const RunConfig& cfg) {
  std::int64_t q = detail::config_lattice_denominator(cfg);
  if (cfg.model == "pd") {
    if (cfg.engine == "occupation") {
      // games are off in the occupation experiment; any valid table works
      return GameSpec::prisoners_dilemma(Rational{1, 1}, Rational{2, 1}, Rational{2, 1},
                                         Rational{1, 1}, q);
    }
    return GameSpec::prisoners_dilemma(cfg.R, cfg.S, cfg.T, cfg.P, q);
  }
  std::vector<Rational> entries;
  for (const auto& row : cfg.payoff_matrix)
    for (const auto& v : row) entries.push_back(v);
  if (cfg.alpha.size() != cfg.strategies)
    throw ConfigError("alpha: expected one action-distribution per strategy");
  GeneralGame g = make_general_game(cfg.actions, entries, cfg.alpha, cfg.death_thresholds, q);
  return GameSpec::general_game(std::move(g), q);
}

inline std::vector<InitAtom> make_atoms(const RunConfig& cfg, const GameSpec& game) {
  std::vector<InitAtom> out;
  for (const auto& a : cfg.atoms) {
    if (a.strategy >= game.strategy_count())
      throw ConfigError("initial.atoms: strategy out of range");
    out.push_back({make_amount(a.wealth, game.q), static_cast<std::uint8_t>(a.strategy), a.prob});
  }
  atom_cdf(out, game.strategy_count());  // validates probabilities sum to one
  return out;
}

inline std::vector<ParticleState> make_particles(const RunConfig& cfg, const GameSpec& game) {
  std::vector<ParticleState> out;
  for (const auto& p : cfg.particles) {
    if (p.strategy >= game.strategy_count())
      throw ConfigError("initial.particles: strategy out of range");
    ParticleState s;
    s.position = p.position;
    s.strategy = static_cast<std::uint8_t>(p.strategy);
    s.wealth = make_amount(p.wealth, game.q);
    s.alive = game.is_alive(s.wealth, s.strategy);
    if (!s.alive && game.mode == GameMode::pd && s.wealth.num < 0) s.wealth.num = 0;
    out.push_back(s);
  }
  return out;
}

inline Graph make_run_graph(const RunConfig& cfg) {
  if (!cfg.graph) throw ConfigError("graph: required for this engine");
  if (cfg.graph->torus_m > 0) return torus_graph(cfg.graph->torus_m);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& e : cfg.graph->edges) edges.emplace_back(e[0], e[1]);
  return make_graph(cfg.graph->vertices, edges);
}

// Engine-specific completeness checks beyond field-level validation.
inline void validate_config(const RunConfig& cfg) {
  auto need = [&](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string(field) + ": " + what);
  };
  if (cfg.engine == "spatial" || cfg.engine == "occupation" || cfg.engine == "homogenization")
    need(cfg.graph.has_value(), "graph", "required for this engine");
  if (cfg.engine == "homogenization" || cfg.engine == "occupation")
    need(cfg.graph && cfg.graph->torus_m > 0, "graph.torus", "experiment runs on a torus");
  if (cfg.engine == "spatial" || cfg.engine == "matching" || cfg.engine == "homogenization" ||
      cfg.engine == "chaos")
    need(cfg.horizon > 0, "horizon", "must be positive");
  if (cfg.engine == "meanfield" || cfg.engine == "chaos")
    need(!cfg.atoms.empty(), "initial.atoms", "the mean-field state is built from atoms");
  if (cfg.engine == "spatial" || cfg.engine == "matching")
    need(cfg.n > 0 || !cfg.particles.empty(), "N", "population size required");
  if (cfg.engine == "homogenization") {
    need(!cfg.d_grid.empty(), "grids.d", "required for the homogenization experiment");
    need(cfg.n > 0, "N", "population size required");
    need(cfg.replicas >= 2, "replicas", "need at least 2");
    need(!cfg.atoms.empty(), "initial.atoms", "experiments draw replicas from atoms");
  }
  if (cfg.engine == "chaos") {
    need(!cfg.n_grid.empty(), "grids.N", "required for the chaos experiment");
    need(cfg.replicas >= 2, "replicas", "need at least 2");
    need(cfg.f_threshold.has_value(), "f_threshold", "test functional threshold required");
  }
  if (cfg.engine == "occupation") need(cfg.horizon > 0, "horizon", "must be positive");
  if (cfg.engine == "meanfield") {
    need(cfg.horizon >= 0, "horizon", "must be nonnegative");
    need(cfg.lambda > 0 || cfg.horizon == 0, "lambda", "interaction rate required");
  }
  if (cfg.model == "general")
    need(cfg.engine != "occupation", "engine",
         "occupation is a single-walker experiment; use model \"pd\"");
  // builders run the deep validation (payoff inequalities, probability sums)
  GameSpec game = make_game_spec(cfg);
  if (!cfg.atoms.empty()) make_atoms(cfg, game);
  if (!cfg.particles.empty()) make_particles(cfg, game);
  if (cfg.graph) make_run_graph(cfg);
  for (const auto& t : cfg.snapshot_times)
    if (t < 0 || t > cfg.horizon) throw ConfigError("snapshots: times must lie in [0, horizon]");
}

inline HomogenizationConfig make_homogenization_config(const RunConfig& cfg) {
  HomogenizationConfig h;
  h.game = make_game_spec(cfg);
  h.torus_m = cfg.graph ? cfg.graph->torus_m : 0;
  h.n_particles = cfg.n;
  h.d_grid = cfg.d_grid;
  h.lambda = cfg.lambda;
  h.horizon = cfg.horizon;
  h.replicas = cfg.replicas;
  h.atoms = make_atoms(cfg, h.game);
  h.seed = cfg.seed;
  h.workers = static_cast<unsigned>(cfg.workers);
  h.ci_z = cfg.ci_z;
  return h;
}

inline ChaosConfig make_chaos_config(const RunConfig& cfg) {
  ChaosConfig c;
  c.game = make_game_spec(cfg);
  c.n_grid.assign(cfg.n_grid.begin(), cfg.n_grid.end());
  c.lambda_m = cfg.lambda;
  c.horizon = cfg.horizon;
  c.replicas = cfg.replicas;
  c.atoms = make_atoms(cfg, c.game);
  if (!cfg.f_threshold) throw ConfigError("f_threshold: test functional threshold required");
  c.f_threshold = *cfg.f_threshold;
  c.dt = cfg.dt;
  c.epsilon = cfg.epsilon;
  c.w1_tolerance = cfg.w1_tolerance;
  c.slope_lo = cfg.slope_lo;
  c.slope_hi = cfg.slope_hi;
  c.spot_n = cfg.spot_n;
  c.seed = cfg.seed;
  c.workers = static_cast<unsigned>(cfg.workers);
  c.ci_z = cfg.ci_z;
  return c;
}

inline OccupationConfig make_occupation_config(const RunConfig& cfg) {
  OccupationConfig o;
  o.torus_m = cfg.graph ? cfg.graph->torus_m : 0;
  o.d = cfg.d;
  o.horizon = cfg.horizon;
  o.site_sets = cfg.site_sets;
  o.tolerance = cfg.tolerance;
  o.seed = cfg.seed;
  return o;
}

}  // namespace dpd
