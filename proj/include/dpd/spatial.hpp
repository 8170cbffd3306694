#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/events.hpp"
#include "dpd/game.hpp"
#include "dpd/graph.hpp"
#include "dpd/rng.hpp"
#include "dpd/trajectory.hpp"

namespace dpd {

// Event-driven simulator for N particles on a graph: every particle moves at
// total rate d (dead ones included), and every co-located alive unordered
// pair attempts a game at rate lambda. Pairs that are separated or dead are
// null events and never enter the rate sum; the alive-per-site index keeps
// the effective game rate lambda * colocated_pairs up to date in O(1) per
// transition.
struct SpatialSystem {
  Graph graph;
  std::uint32_t torus_m = 0;  // > 0: directional torus moves; 0: uniform-neighbor moves
  GameSpec game;
  double d = 0.0;       // per-particle move rate
  double lambda = 0.0;  // per-unordered-pair game-attempt rate

  std::vector<ParticleState> particles;
  double clock = 0.0;
  RngStream rng{0};

  std::vector<std::vector<std::uint32_t>> site_alive;  // vertex -> alive particle ids
  std::vector<std::uint32_t> slot_in_site;             // particle -> its index in site_alive
  std::uint64_t colocated_pairs = 0;
  EventCounts counts;
  std::vector<std::uint64_t> games_per_particle;
};

struct EventRates {
  double move = 0.0;
  double game = 0.0;
  double total = 0.0;
};

inline EventRates event_rates(const SpatialSystem& s) {
  EventRates r;
  r.move = static_cast<double>(s.particles.size()) * s.d;
  r.game = s.lambda * static_cast<double>(s.colocated_pairs);
  r.total = r.move + r.game;
  return r;
}

namespace detail {

inline void site_insert(SpatialSystem& s, std::uint32_t i) {
  auto& list = s.site_alive[s.particles[i].position];
  s.colocated_pairs += list.size();
  s.slot_in_site[i] = static_cast<std::uint32_t>(list.size());
  list.push_back(i);
}

inline void site_remove(SpatialSystem& s, std::uint32_t i) {
  auto& list = s.site_alive[s.particles[i].position];
  s.colocated_pairs -= list.size() - 1;
  std::uint32_t slot = s.slot_in_site[i];
  list[slot] = list.back();
  s.slot_in_site[list[slot]] = slot;
  list.pop_back();
}

// Unordered-pair index p in [0, n(n-1)/2) -> (r, c) with r < c < n,
// enumerating (0,1), (0,2), ..., (0,n-1), (1,2), ...
inline std::pair<std::uint32_t, std::uint32_t> decode_pair(std::uint64_t p, std::uint64_t n) {
  std::uint32_t r = 0;
  std::uint64_t row = n - 1;
  while (p >= row) {
    p -= row;
    --row;
    ++r;
  }
  return {r, static_cast<std::uint32_t>(r + 1 + p)};
}

}  // namespace detail

inline void check_consistency(const SpatialSystem& s) {
  std::vector<std::uint64_t> count(s.graph.n, 0);
  for (std::uint32_t i = 0; i < s.particles.size(); ++i) {
    const auto& p = s.particles[i];
    if (!p.alive) continue;
    ++count[p.position];
    const auto& list = s.site_alive[p.position];
    if (s.slot_in_site[i] >= list.size() || list[s.slot_in_site[i]] != i)
      throw UsageError("site index lost particle " + std::to_string(i));
  }
  std::uint64_t pairs = 0;
  for (std::uint32_t v = 0; v < s.graph.n; ++v) {
    if (count[v] != s.site_alive[v].size())
      throw UsageError("site census mismatch at vertex " + std::to_string(v));
    pairs += count[v] * (count[v] - 1) / 2;
  }
  if (pairs != s.colocated_pairs)
    throw UsageError("co-located pair count drifted: cached " +
                     std::to_string(s.colocated_pairs) + ", actual " + std::to_string(pairs));
}

namespace detail {

inline SpatialSystem make_spatial(Graph g, std::uint32_t torus_m, const GameSpec& game,
                                  double d, double lambda, std::vector<ParticleState> particles,
                                  RngStream rng) {
  if (particles.empty()) throw ConfigError("spatial: need at least one particle");
  if (d < 0 || lambda < 0) throw ConfigError("spatial: rates must be nonnegative");
  SpatialSystem s;
  s.graph = std::move(g);
  s.torus_m = torus_m;
  s.game = game;
  s.d = d;
  s.lambda = lambda;
  s.particles = std::move(particles);
  s.rng = rng;
  s.site_alive.assign(s.graph.n, {});
  s.slot_in_site.assign(s.particles.size(), 0);
  s.games_per_particle.assign(s.particles.size(), 0);
  for (std::uint32_t i = 0; i < s.particles.size(); ++i) {
    auto& p = s.particles[i];
    if (p.position >= s.graph.n) throw ConfigError("spatial: particle position out of range");
    if (p.wealth.den != game.q) throw ConfigError("spatial: initial wealth off the run lattice");
    if (p.strategy >= game.strategy_count())
      throw ConfigError("spatial: particle strategy out of range");
    if (p.alive) site_insert(s, i);
  }
  return s;
}

// Draw one particle state from the product measure: position ~ pi, then an
// atom of nu. Atoms landing in the death region start the particle dead
// (wealth clamped to 0 in PD mode, kept in general mode).
inline ParticleState draw_initial(const GameSpec& game, const std::vector<InitAtom>& atoms,
                                  const std::vector<double>& atom_cd,
                                  const std::vector<double>& pi_cdf, RngStream& rng) {
  ParticleState p;
  double u_pos = rng.uniform();
  std::uint32_t v = 0;
  while (v + 1 < pi_cdf.size() && u_pos >= pi_cdf[v]) ++v;
  p.position = v;
  const InitAtom& atom = draw_atom(atoms, atom_cd, rng.uniform());
  p.wealth = atom.wealth;
  p.strategy = atom.strategy;
  p.alive = game.is_alive(p.wealth, p.strategy);
  if (!p.alive && game.mode == GameMode::pd) p.wealth = Wealth{0, p.wealth.den};
  return p;
}

inline std::vector<double> stationary_cdf(const Graph& g) {
  std::vector<double> cdf;
  Rational sum(0);
  for (const auto& pr : stationary_distribution(g)) {
    sum = sum + pr;
    cdf.push_back(sum.value());
  }
  return cdf;
}

}  // namespace detail

// Explicit initial states.
inline SpatialSystem init_spatial(Graph g, std::uint32_t torus_m, const GameSpec& game, double d,
                                  double lambda, std::vector<ParticleState> particles,
                                  std::uint64_t seed) {
  return detail::make_spatial(std::move(g), torus_m, game, d, lambda, std::move(particles),
                              RngStream(seed));
}

// i.i.d. product initial condition: position ~ stationary pi, marks ~ nu.
inline SpatialSystem init_spatial(Graph g, std::uint32_t torus_m, const GameSpec& game, double d,
                                  double lambda, std::uint32_t n,
                                  const std::vector<InitAtom>& nu, std::uint64_t seed) {
  if (n == 0) throw ConfigError("spatial: need at least one particle");
  auto cdf = atom_cdf(nu, game.strategy_count());
  for (const auto& a : nu)
    if (a.wealth.den != game.q) throw ConfigError("initial.atoms: wealth off the run lattice");
  RngStream rng(seed);
  auto pi_cdf = detail::stationary_cdf(g);
  std::vector<ParticleState> particles;
  particles.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    particles.push_back(detail::draw_initial(game, nu, cdf, pi_cdf, rng));
  return detail::make_spatial(std::move(g), torus_m, game, d, lambda, std::move(particles), rng);
}

inline SpatialSystem init_spatial_torus(std::uint32_t m, const GameSpec& game, double d,
                                        double lambda, std::vector<ParticleState> particles,
                                        std::uint64_t seed) {
  return init_spatial(torus_graph(m), m, game, d, lambda, std::move(particles), seed);
}

inline SpatialSystem init_spatial_torus(std::uint32_t m, const GameSpec& game, double d,
                                        double lambda, std::uint32_t n,
                                        const std::vector<InitAtom>& nu, std::uint64_t seed) {
  return init_spatial(torus_graph(m), m, game, d, lambda, n, nu, seed);
}

// Samples the next transition without applying it. Consumes a fixed number of
// draws per event kind (move: time, kind, particle, direction; game: time,
// kind, site, pair, two outcome uniforms) so equal-seed runs of different
// rule sets stay aligned draw-for-draw.
inline Event sample_event(SpatialSystem& s) {
  EventRates r = event_rates(s);
  Event ev;
  if (r.total <= 0.0) {
    ev.dt = std::numeric_limits<double>::infinity();
    return ev;
  }
  ev.dt = s.rng.exponential(r.total);
  if (s.rng.uniform() * r.total < r.move) {
    ev.kind = EventKind::move;
    ev.a = s.rng.index(static_cast<std::uint32_t>(s.particles.size()));
    std::uint32_t from = s.particles[ev.a].position;
    if (s.torus_m > 0) {
      ev.b = torus_move_target(s.torus_m, from, static_cast<int>(s.rng.index(4)));
    } else {
      const auto& nb = s.graph.adj[from];
      ev.b = nb.empty() ? from : nb[s.rng.index(static_cast<std::uint32_t>(nb.size()))];
    }
  } else {
    ev.kind = EventKind::game;
    // site chosen with probability proportional to its alive-pair count
    double target = s.rng.uniform() * static_cast<double>(s.colocated_pairs);
    std::uint32_t site = 0;
    std::uint64_t cum = 0;
    for (std::uint32_t v = 0; v < s.graph.n; ++v) {
      std::uint64_t n_v = s.site_alive[v].size();
      if (n_v < 2) continue;
      cum += n_v * (n_v - 1) / 2;
      site = v;
      if (target < static_cast<double>(cum)) break;
    }
    const auto& list = s.site_alive[site];
    std::uint64_t n_pairs = list.size() * (list.size() - 1) / 2;
    std::uint64_t p = s.rng.index(static_cast<std::uint32_t>(n_pairs));
    auto [ra, rb] = detail::decode_pair(p, list.size());
    ev.a = list[ra];
    ev.b = list[rb];
    ev.u1 = s.rng.uniform();
    ev.u2 = s.rng.uniform();
  }
  return ev;
}

// Applies a transition. Replaying a recorded stream through here reproduces
// the trajectory exactly; no randomness is consumed.
inline void apply_event(SpatialSystem& s, const Event& ev) {
  s.clock += ev.dt;
  if (ev.kind == EventKind::move) {
    auto& p = s.particles[ev.a];
    if (p.alive) detail::site_remove(s, ev.a);
    p.position = ev.b;
    if (p.alive) detail::site_insert(s, ev.a);
    ++s.counts.moves;
    return;
  }
  if (ev.kind != EventKind::game) return;
  ParticleState& pa = s.particles[ev.a];
  ParticleState& pb = s.particles[ev.b];
  if (!pa.alive || !pb.alive) throw UsageError("game event on a dead particle");
  auto [da, db] = s.game.outcome(pa.strategy, pb.strategy, ev.u1, ev.u2);
  if (s.game.mode == GameMode::pd) {
    int defectors = (pa.strategy == kDefect) + (pb.strategy == kDefect);
    if (defectors == 0)
      ++s.counts.games_cc;
    else if (defectors == 1)
      ++s.counts.games_cd;
    else
      ++s.counts.games_dd;
  } else {
    ++s.counts.games_general;
  }
  ++s.games_per_particle[ev.a];
  ++s.games_per_particle[ev.b];
  const GeneralGame* gg = s.game.mode == GameMode::general ? &s.game.general : nullptr;
  ParticleState na = apply_payoff(pa, da, s.game.mode, gg);
  ParticleState nb = apply_payoff(pb, db, s.game.mode, gg);
  if (!na.alive) detail::site_remove(s, ev.a);
  if (!nb.alive) detail::site_remove(s, ev.b);
  pa = na;
  pb = nb;
}

// Samples and applies one transition; returns the time-infinity sentinel
// (kind none) when nothing can fire.
inline Event advance(SpatialSystem& s) {
  Event ev = sample_event(s);
  if (ev.kind != EventKind::none) apply_event(s, ev);
  return ev;
}

namespace detail {

// Shared driver for the spatial and matching engines.
template <typename System, typename Sampler, typename Applier>
Trajectory run_loop(System& s, double horizon, const std::vector<double>& snapshot_times,
                    bool record_events, Sampler sample, Applier apply) {
  for (std::size_t k = 0; k + 1 < snapshot_times.size(); ++k)
    if (snapshot_times[k] > snapshot_times[k + 1])
      throw UsageError("snapshot times must be sorted");
  if (!snapshot_times.empty() && snapshot_times.back() > horizon)
    throw UsageError("snapshot time beyond horizon");

  Trajectory traj;
  traj.initial = s.particles;
  traj.horizon = horizon;
  std::size_t next_snap = 0;
  for (;;) {
    Event ev = sample(s);
    double fire_at = s.clock + ev.dt;
    if (ev.kind == EventKind::none || fire_at > horizon) {
      while (next_snap < snapshot_times.size()) {
        traj.snapshots.push_back({snapshot_times[next_snap], s.particles});
        ++next_snap;
      }
      s.clock = horizon;
      break;
    }
    while (next_snap < snapshot_times.size() && snapshot_times[next_snap] < fire_at) {
      traj.snapshots.push_back({snapshot_times[next_snap], s.particles});
      ++next_snap;
    }
    apply(s, ev);
    if (record_events) traj.events.push_back(ev);
  }
  traj.counts = s.counts;
  traj.games_per_particle = s.games_per_particle;
  return traj;
}

}  // namespace detail

inline Trajectory run(SpatialSystem& s, double horizon, const std::vector<double>& snapshot_times,
                      bool record_events = false) {
  return detail::run_loop(
      s, horizon, snapshot_times, record_events, [](SpatialSystem& sys) { return sample_event(sys); },
      [](SpatialSystem& sys, const Event& ev) { apply_event(sys, ev); });
}

}  // namespace dpd
