#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/game.hpp"
#include "dpd/graph.hpp"
#include "dpd/matching.hpp"
#include "dpd/meanfield.hpp"
#include "dpd/measure.hpp"
#include "dpd/parallel.hpp"
#include "dpd/rng.hpp"
#include "dpd/spatial.hpp"
#include "dpd/stats.hpp"
#include "dpd/trajectory.hpp"

namespace dpd {

// Stream salts keeping the RNG streams of different experiment roles disjoint.
inline constexpr std::uint64_t kStreamSpatial = 1;
inline constexpr std::uint64_t kStreamMatchingRef = 2;
inline constexpr std::uint64_t kStreamMatchingSelf = 3;
inline constexpr std::uint64_t kStreamChaos = 4;
inline constexpr std::uint64_t kStreamOccupation = 5;

struct ExperimentCell {
  std::vector<std::string> coords;  // aligned with ExperimentReport::grid_keys
  double statistic = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t replicas = 0;
  bool verdict = true;
};

struct ExperimentCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // the numbers the verdict was computed from
};

struct ExperimentReport {
  std::string name;
  std::vector<std::string> grid_keys;
  std::vector<ExperimentCell> cells;
  std::vector<ExperimentCheck> checks;
  std::uint64_t seed = 0;

  bool passed() const {
    for (const auto& c : cells)
      if (!c.verdict) return false;
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Wealth-marginal distance between two joint measures: the strategy-weighted
// sum of per-strategy W1 distances, with weights equal to the average strategy
// mass of the two sides. Strategies carrying no mass on either side are
// skipped. Dead atoms enter at their stored wealth (0 under the clamp rule).
inline double marginal_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                std::uint32_t strategy_count) {
  constexpr double kMassFloor = 1e-12;
  double total = 0.0;
  for (std::uint32_t z = 0; z < strategy_count; ++z) {
    double ma = strategy_mass(a, static_cast<int>(z));
    double mb = strategy_mass(b, static_cast<int>(z));
    if (ma < kMassFloor || mb < kMassFloor) continue;
    double weight = 0.5 * (ma + mb);
    total += weight * wasserstein1(wealth_marginal(a, static_cast<int>(z)),
                                   wealth_marginal(b, static_cast<int>(z)));
  }
  return total;
}

// Jackknife standard error of marginal_distance over paired replica pools.
inline double pooled_distance_se(const std::vector<EmpiricalMeasure>& as,
                                 const std::vector<EmpiricalMeasure>& bs,
                                 std::uint32_t strategy_count) {
  std::size_t n = std::min(as.size(), bs.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return jackknife_se(n, [&](std::size_t skip) {
    return marginal_distance(pool_measures(as, skip), pool_measures(bs, skip), strategy_count);
  });
}

// Jackknife SE when only one side is pooled (the other is a fixed measure).
inline double pooled_distance_se(const std::vector<EmpiricalMeasure>& as,
                                 const EmpiricalMeasure& fixed, std::uint32_t strategy_count) {
  if (as.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return jackknife_se(as.size(), [&](std::size_t skip) {
    return marginal_distance(pool_measures(as, skip), fixed, strategy_count);
  });
}

struct TrendResult {
  bool pass = true;
  std::string detail;
};

// Nonincreasing trend across cells, allowing slack of z * combined SE per step.
inline TrendResult nonincreasing_within_ci(const std::vector<const ExperimentCell*>& cells,
                                           double z) {
  TrendResult r;
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    double slack = 0.0;
    if (std::isfinite(cells[i]->std_error) && std::isfinite(cells[i + 1]->std_error)) {
      slack = z * std::sqrt(cells[i]->std_error * cells[i]->std_error +
                            cells[i + 1]->std_error * cells[i + 1]->std_error);
    }
    bool ok = cells[i + 1]->statistic <= cells[i]->statistic + slack;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += format_number(cells[i]->statistic) + " -> " +
                format_number(cells[i + 1]->statistic) + " (slack " + format_number(slack) + ")";
    if (!ok) r.pass = false;
  }
  return r;
}

inline bool intervals_overlap(double a, double sa, double b, double sb, double z) {
  return std::abs(a - b) <= z * (sa + sb);
}

// Per-replica sufficient statistics for the exchangeability-pooled pair
// covariance: u = mean of f_i * f_j over ordered pairs i != j, g = mean f_i.
struct PairPoolStat {
  double u = 0.0;
  double g = 0.0;
};

inline PairPoolStat pair_pool_stat(const std::vector<double>& fs) {
  if (fs.size() < 2) throw UsageError("pair_pool_stat: need at least two particles");
  double s = 0.0, q = 0.0;
  for (double f : fs) {
    s += f;
    q += f * f;
  }
  double n = static_cast<double>(fs.size());
  return {(s * s - q) / (n * (n - 1.0)), s / n};
}

// Pooled pair-covariance estimate: by exchangeability Cov(f(Y_i), f(Y_j)) is
// the same for every pair, so averaging the pair product over all ordered
// pairs within each replica estimates the same quantity as the (Y_1, Y_2)
// estimator with far less Monte Carlo noise. The plug-in mean-square term
// carries an O(1/replicas) bias, negligible against the reported SE.
inline CovEstimate pooled_pair_covariance(const std::vector<PairPoolStat>& reps) {
  std::size_t n = reps.size();
  if (n < 2) throw UsageError("pooled_pair_covariance: need at least 2 replicas");
  double su = 0.0, sg = 0.0;
  for (const auto& r : reps) {
    su += r.u;
    sg += r.g;
  }
  double nn = static_cast<double>(n);
  CovEstimate out;
  double gbar = sg / nn;
  out.estimate = su / nn - gbar * gbar;
  if (n >= 3) {
    out.se = jackknife_se(n, [&](std::size_t skip) {
      double g = (sg - reps[skip].g) / (nn - 1.0);
      return (su - reps[skip].u) / (nn - 1.0) - g * g;
    });
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Homogenization: spatial model at increasing move rate d against the
// unslowed random-matching model with pair rate lambda * collision mass.
// ---------------------------------------------------------------------------

struct HomogenizationConfig {
  GameSpec game;
  std::uint32_t torus_m = 3;
  std::size_t n_particles = 4;
  std::vector<double> d_grid;
  double lambda = 1.0;  // per co-located unordered pair game-attempt rate
  double horizon = 3.0;
  std::size_t replicas = 400;
  std::vector<InitAtom> atoms;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  double ci_z = 1.96;
};

inline ExperimentReport homogenization_experiment(const HomogenizationConfig& cfg) {
  if (cfg.d_grid.empty()) throw ConfigError("grids.d: must be non-empty");
  if (cfg.replicas < 2) throw ConfigError("replicas: need at least 2");
  for (double d : cfg.d_grid)
    if (!(d >= 0.0)) throw ConfigError("grids.d: entries must be nonnegative");

  Graph torus = torus_graph(cfg.torus_m);
  double mass = collision_mass(torus).value();
  double rm_rate = cfg.lambda * mass;  // homogenized per-pair rate, unslowed
  std::uint32_t zs = cfg.game.strategy_count();

  auto matching_pool = [&](std::uint64_t salt) {
    std::vector<EmpiricalMeasure> pool(cfg.replicas);
    parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
      MatchingSystem sys = init_matching(cfg.game, cfg.n_particles, rm_rate, false, cfg.atoms,
                                         derive_seed(cfg.seed, {salt, r}));
      run_matching(sys, cfg.horizon, {});
      pool[r] = empirical_measure(sys.particles, cfg.game.q);
    });
    return pool;
  };
  std::vector<EmpiricalMeasure> rm_ref = matching_pool(kStreamMatchingRef);
  std::vector<EmpiricalMeasure> rm_self = matching_pool(kStreamMatchingSelf);

  ExperimentReport report;
  report.name = "homogenization";
  report.grid_keys = {"d"};
  report.seed = cfg.seed;

  for (std::size_t c = 0; c < cfg.d_grid.size(); ++c) {
    double d = cfg.d_grid[c];
    std::vector<EmpiricalMeasure> pool(cfg.replicas);
    parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
      SpatialSystem sys = init_spatial_torus(cfg.torus_m, cfg.game, d, cfg.lambda,
                                             cfg.n_particles, cfg.atoms,
                                             derive_seed(cfg.seed, {kStreamSpatial, c, r}));
      run(sys, cfg.horizon, {});
      pool[r] = empirical_measure(sys.particles, cfg.game.q);
    });
    ExperimentCell cell;
    cell.coords = {detail::format_number(d)};
    cell.statistic = detail::marginal_distance(pool_measures(pool), pool_measures(rm_ref), zs);
    cell.std_error = detail::pooled_distance_se(pool, rm_ref, zs);
    cell.replicas = cfg.replicas;
    report.cells.push_back(std::move(cell));
  }

  // Reference row: distance between two independent random-matching pools,
  // i.e. the pure-sampling-noise floor the d -> infinity cells should reach.
  ExperimentCell self;
  self.coords = {"rm_self"};
  self.statistic = detail::marginal_distance(pool_measures(rm_ref), pool_measures(rm_self), zs);
  self.std_error = detail::pooled_distance_se(rm_ref, rm_self, zs);
  self.replicas = cfg.replicas;

  std::vector<const ExperimentCell*> grid_cells;
  for (const auto& cell : report.cells) grid_cells.push_back(&cell);
  detail::TrendResult trend = detail::nonincreasing_within_ci(grid_cells, cfg.ci_z);
  for (std::size_t c = 1; c < report.cells.size(); ++c) {
    double slack = cfg.ci_z * std::sqrt(report.cells[c - 1].std_error * report.cells[c - 1].std_error +
                                        report.cells[c].std_error * report.cells[c].std_error);
    report.cells[c].verdict =
        report.cells[c].statistic <= report.cells[c - 1].statistic + slack;
  }
  report.checks.push_back({"nonincreasing_within_ci", trend.pass, trend.detail});

  const ExperimentCell& last = report.cells.back();
  bool overlap = detail::intervals_overlap(last.statistic, last.std_error, self.statistic,
                                           self.std_error, cfg.ci_z);
  report.checks.push_back(
      {"final_cell_matches_reference", overlap,
       "final " + detail::format_number(last.statistic) + " +/- " +
           detail::format_number(last.std_error) + " vs reference " +
           detail::format_number(self.statistic) + " +/- " + detail::format_number(self.std_error)});
  self.verdict = overlap;
  report.cells.push_back(std::move(self));
  return report;
}

// ---------------------------------------------------------------------------
// Chaos: slowed random matching across an N grid against the mean-field law.
// Per N it reports the pair covariance of a threshold indicator on particles
// 0 and 1, and the W1 distance between the pooled empirical measure at the
// horizon and the mean-field solution.
// ---------------------------------------------------------------------------

struct ChaosConfig {
  GameSpec game;
  std::vector<std::size_t> n_grid;
  double lambda_m = 1.0;  // homogenized pair-rate scale; slowed engine uses lambda_m / N
  double horizon = 3.0;
  std::size_t replicas = 2000;
  std::vector<InitAtom> atoms;
  Rational f_threshold{1, 1};  // test functional: indicator {wealth > f_threshold}
  double dt = 1e-3;
  double epsilon = 1e-8;
  double w1_tolerance = 0.05;
  double slope_lo = -1.6;
  double slope_hi = -0.4;
  std::size_t spot_n = 0;  // optional extra N checked against w1_tolerance only
  std::uint64_t seed = 0;
  unsigned workers = 0;
  double ci_z = 1.96;
};

inline ExperimentReport chaos_experiment(const ChaosConfig& cfg) {
  if (cfg.n_grid.empty()) throw ConfigError("grids.N: must be non-empty");
  if (cfg.replicas < 2) throw ConfigError("replicas: need at least 2");
  std::vector<std::size_t> ns = cfg.n_grid;
  if (!std::is_sorted(ns.begin(), ns.end())) throw ConfigError("grids.N: must be increasing");

  // Mean-field reference law at the horizon with kappa = lambda_m.
  LatticeSpec lat = build_lattice(cfg.atoms, cfg.game, cfg.horizon, cfg.lambda_m, cfg.epsilon);
  MeanFieldState mf0 = initial_state(lat, cfg.game, cfg.atoms);
  DriftFn f = make_drift(lat, cfg.game, cfg.lambda_m);
  MeanFieldState mf_t = integrate(mf0, cfg.horizon, cfg.dt, {cfg.horizon}, f).back();
  EmpiricalMeasure mu_t = mf_measure(mf_t, lat);
  std::uint32_t zs = cfg.game.strategy_count();

  ExperimentReport report;
  report.name = "chaos";
  report.grid_keys = {"N", "quantity"};
  report.seed = cfg.seed;

  std::vector<std::size_t> all_ns = ns;
  if (cfg.spot_n > 0) all_ns.push_back(cfg.spot_n);

  struct CellResult {
    std::vector<detail::PairPoolStat> pair_values;
    std::vector<EmpiricalMeasure> pool;
  };

  std::vector<std::size_t> cov_idx, w1_idx;  // indices: cells grows while we fill it
  std::vector<double> cov_ns;
  for (std::size_t c = 0; c < all_ns.size(); ++c) {
    std::size_t n = all_ns[c];
    bool spot = c >= ns.size();
    CellResult res;
    res.pair_values.resize(cfg.replicas);
    res.pool.resize(cfg.replicas);
    Wealth threshold = make_amount(cfg.f_threshold, cfg.game.q);
    parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
      MatchingSystem sys = init_matching(cfg.game, n, cfg.lambda_m, true, cfg.atoms,
                                         derive_seed(cfg.seed, {kStreamChaos, c, r}));
      run_matching(sys, cfg.horizon, {});
      if (n >= 2) {
        std::vector<double> fs(sys.particles.size());
        for (std::size_t i = 0; i < fs.size(); ++i) {
          const ParticleState& p = sys.particles[i];
          fs[i] = (p.alive && threshold < p.wealth) ? 1.0 : 0.0;
        }
        res.pair_values[r] = detail::pair_pool_stat(fs);
      }
      res.pool[r] = empirical_measure(sys.particles, cfg.game.q);
    });

    if (n >= 2) {  // a single particle has no pair; the covariance cell is absent
      CovEstimate cov = detail::pooled_pair_covariance(res.pair_values);
      ExperimentCell cell;
      cell.coords = {std::to_string(n), "cov"};
      cell.statistic = cov.estimate;
      cell.std_error = cov.se;
      cell.replicas = cfg.replicas;
      report.cells.push_back(std::move(cell));
      if (!spot) {
        cov_idx.push_back(report.cells.size() - 1);
        cov_ns.push_back(static_cast<double>(n));
      }
    }

    ExperimentCell w1;
    w1.coords = {std::to_string(n), "w1"};
    w1.statistic = detail::marginal_distance(pool_measures(res.pool), mu_t, zs);
    w1.std_error = detail::pooled_distance_se(res.pool, mu_t, zs);
    w1.replicas = cfg.replicas;
    w1.verdict = !spot || w1.statistic <= cfg.w1_tolerance;
    report.cells.push_back(std::move(w1));
    if (!spot) w1_idx.push_back(report.cells.size() - 1);
    if (spot) {
      report.checks.push_back({"spot_within_tolerance", report.cells.back().verdict,
                               "N=" + std::to_string(n) + " w1 " +
                                   detail::format_number(report.cells.back().statistic) +
                                   " vs tolerance " + detail::format_number(cfg.w1_tolerance)});
    }
  }

  std::vector<const ExperimentCell*> cov_cells, w1_cells;
  for (std::size_t i : cov_idx) cov_cells.push_back(&report.cells[i]);
  for (std::size_t i : w1_idx) w1_cells.push_back(&report.cells[i]);

  if (cov_cells.size() >= 2) {
    double first = std::abs(cov_cells.front()->statistic);
    double last = std::abs(cov_cells.back()->statistic);
    report.checks.push_back({"covariance_shrinks", last < first,
                             "|cov| " + detail::format_number(first) + " at N=" +
                                 detail::format_number(cov_ns.front()) + " vs " +
                                 detail::format_number(last) + " at N=" +
                                 detail::format_number(cov_ns.back())});
    std::vector<double> abs_cov;
    bool positive = true;
    for (const ExperimentCell* cell : cov_cells) {
      abs_cov.push_back(std::abs(cell->statistic));
      if (abs_cov.back() <= 0.0) positive = false;
    }
    if (positive) {
      double slope = loglog_slope(cov_ns, abs_cov);
      report.checks.push_back({"covariance_slope_in_window",
                               slope >= cfg.slope_lo && slope <= cfg.slope_hi,
                               "slope " + detail::format_number(slope) + " in [" +
                                   detail::format_number(cfg.slope_lo) + ", " +
                                   detail::format_number(cfg.slope_hi) + "]"});
    } else {
      report.checks.push_back({"covariance_slope_in_window", false,
                               "covariance estimate hit 0; slope undefined"});
    }
  }
  if (w1_cells.size() >= 2) {
    detail::TrendResult trend = detail::nonincreasing_within_ci(w1_cells, cfg.ci_z);
    report.checks.push_back({"w1_decreasing", trend.pass, trend.detail});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Occupation: a lone walker on the torus with games switched off; compares
// time-in-set fractions against the stationary distribution.
// ---------------------------------------------------------------------------

struct OccupationConfig {
  std::uint32_t torus_m = 5;
  double d = 100.0;
  double horizon = 1000.0;
  std::vector<std::vector<std::uint32_t>> site_sets;  // empty: one set per vertex
  double tolerance = 0.02;
  std::uint64_t seed = 0;
};

inline ExperimentReport occupation_experiment(const OccupationConfig& cfg) {
  if (!(cfg.horizon > 0.0)) throw ConfigError("horizon: must be positive");
  Graph torus = torus_graph(cfg.torus_m);
  // Games are off (lambda = 0); the payoff table is inert but must be valid.
  GameSpec game = GameSpec::prisoners_dilemma(Rational{1, 1}, Rational{2, 1}, Rational{2, 1},
                                              Rational{1, 1}, 1);
  std::vector<InitAtom> atoms = {{make_amount(1, 1, game.q), kCooperate, Rational{1, 1}}};
  SpatialSystem sys = init_spatial_torus(cfg.torus_m, game, cfg.d, 0.0, 1, atoms,
                                         derive_seed(cfg.seed, {kStreamOccupation}));
  Trajectory traj = run(sys, cfg.horizon, {}, /*record_events=*/true);

  std::vector<Rational> pi = stationary_distribution(torus);
  std::vector<std::vector<std::uint32_t>> sets = cfg.site_sets;
  if (sets.empty()) {
    for (std::uint32_t v = 0; v < torus.n; ++v) sets.push_back({v});
  }

  ExperimentReport report;
  report.name = "occupation";
  report.grid_keys = {"set"};
  report.seed = cfg.seed;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Rational target{0, 1};
    for (std::uint32_t v : sets[i]) {
      if (v >= torus.n) throw ConfigError("grids.sites: vertex out of range");
      target = target + pi[v];
    }
    double fraction = occupation_fraction(traj, 0, sets[i], torus.n);
    ExperimentCell cell;
    cell.coords = {"S" + std::to_string(i)};
    cell.statistic = std::abs(fraction - target.value());
    cell.replicas = 1;
    cell.verdict = cell.statistic <= cfg.tolerance;
    report.cells.push_back(std::move(cell));
  }
  report.checks.push_back({"max_error_within_tolerance",
                           std::all_of(report.cells.begin(), report.cells.end(),
                                       [](const ExperimentCell& c) { return c.verdict; }),
                           "tolerance " + detail::format_number(cfg.tolerance)});
  return report;
}

}  // namespace dpd
