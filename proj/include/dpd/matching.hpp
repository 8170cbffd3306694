#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/events.hpp"
#include "dpd/game.hpp"
#include "dpd/rng.hpp"
#include "dpd/spatial.hpp"
#include "dpd/trajectory.hpp"

namespace dpd {

// Random-matching chain: no spatial structure, every alive unordered pair
// interacts at the same rate. pair_rate = lambda * collision_mass for the
// homogenized chain, divided by N for the slowed chain (the time change
// t -> t/N under which chaos propagates).
struct MatchingSystem {
  GameSpec game;
  double pair_rate = 0.0;

  std::vector<ParticleState> particles;
  double clock = 0.0;
  RngStream rng{0};

  std::vector<std::uint32_t> alive_ids;         // sorted
  std::vector<std::uint64_t> alive_by_strategy;
  EventCounts counts;
  std::vector<std::uint64_t> games_per_particle;
};

inline double matching_total_rate(const MatchingSystem& s) {
  std::uint64_t n = s.alive_ids.size();
  return s.pair_rate * static_cast<double>(n * (n - 1) / 2);
}

namespace detail {

inline MatchingSystem make_matching(const GameSpec& game, double pair_rate,
                                    std::vector<ParticleState> particles, RngStream rng) {
  if (particles.empty()) throw ConfigError("matching: need at least one particle");
  if (pair_rate < 0) throw ConfigError("matching: pair rate must be nonnegative");
  MatchingSystem s;
  s.game = game;
  s.pair_rate = pair_rate;
  s.particles = std::move(particles);
  s.rng = rng;
  s.alive_by_strategy.assign(game.strategy_count(), 0);
  s.games_per_particle.assign(s.particles.size(), 0);
  for (std::uint32_t i = 0; i < s.particles.size(); ++i) {
    auto& p = s.particles[i];
    p.position = 0;  // unused by this engine
    if (p.wealth.den != game.q) throw ConfigError("matching: initial wealth off the run lattice");
    if (p.strategy >= game.strategy_count())
      throw ConfigError("matching: particle strategy out of range");
    if (p.alive) {
      s.alive_ids.push_back(i);
      ++s.alive_by_strategy[p.strategy];
    }
  }
  return s;
}

}  // namespace detail

// i.i.d. draws from nu; pair_rate_base is lambda * collision_mass.
inline MatchingSystem init_matching(const GameSpec& game, std::uint32_t n, double pair_rate_base,
                                    bool slowed, const std::vector<InitAtom>& nu,
                                    std::uint64_t seed) {
  if (n == 0) throw ConfigError("matching: need at least one particle");
  auto cdf = atom_cdf(nu, game.strategy_count());
  for (const auto& a : nu)
    if (a.wealth.den != game.q) throw ConfigError("initial.atoms: wealth off the run lattice");
  RngStream rng(seed);
  std::vector<ParticleState> particles;
  particles.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    ParticleState p;
    const InitAtom& atom = draw_atom(nu, cdf, rng.uniform());
    p.wealth = atom.wealth;
    p.strategy = atom.strategy;
    p.alive = game.is_alive(p.wealth, p.strategy);
    if (!p.alive && game.mode == GameMode::pd) p.wealth = Wealth{0, p.wealth.den};
    particles.push_back(p);
  }
  double pair_rate = slowed ? pair_rate_base / n : pair_rate_base;
  return detail::make_matching(game, pair_rate, std::move(particles), rng);
}

// Explicit initial states (mainly for tests and replay).
inline MatchingSystem init_matching(const GameSpec& game, double pair_rate_base, bool slowed,
                                    std::vector<ParticleState> particles, std::uint64_t seed) {
  double pair_rate = slowed ? pair_rate_base / particles.size() : pair_rate_base;
  return detail::make_matching(game, pair_rate, std::move(particles), RngStream(seed));
}

// Draw order per event: time, pair index, two outcome uniforms.
inline Event sample_matching_event(MatchingSystem& s) {
  Event ev;
  double total = matching_total_rate(s);
  if (total <= 0.0) {
    ev.dt = std::numeric_limits<double>::infinity();
    return ev;
  }
  ev.dt = s.rng.exponential(total);
  ev.kind = EventKind::game;
  std::uint64_t n = s.alive_ids.size();
  std::uint64_t p = s.rng.index(static_cast<std::uint32_t>(n * (n - 1) / 2));
  auto [ra, rb] = detail::decode_pair(p, n);
  ev.a = s.alive_ids[ra];
  ev.b = s.alive_ids[rb];
  ev.u1 = s.rng.uniform();
  ev.u2 = s.rng.uniform();
  return ev;
}

inline void apply_matching_event(MatchingSystem& s, const Event& ev) {
  s.clock += ev.dt;
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
  auto drop = [&s](std::uint32_t id, const ParticleState& p) {
    auto it = std::lower_bound(s.alive_ids.begin(), s.alive_ids.end(), id);
    s.alive_ids.erase(it);
    --s.alive_by_strategy[p.strategy];
  };
  if (!na.alive) drop(ev.a, pa);
  if (!nb.alive) drop(ev.b, pb);
  pa = na;
  pb = nb;
}

inline Event advance_matching(MatchingSystem& s) {
  Event ev = sample_matching_event(s);
  if (ev.kind != EventKind::none) apply_matching_event(s, ev);
  return ev;
}

inline Trajectory run_matching(MatchingSystem& s, double horizon,
                               const std::vector<double>& snapshot_times,
                               bool record_events = false) {
  return detail::run_loop(
      s, horizon, snapshot_times, record_events,
      [](MatchingSystem& sys) { return sample_matching_event(sys); },
      [](MatchingSystem& sys, const Event& ev) { apply_matching_event(sys, ev); });
}

inline void check_consistency(const MatchingSystem& s) {
  std::vector<std::uint64_t> by_strategy(s.game.strategy_count(), 0);
  std::vector<std::uint32_t> alive;
  for (std::uint32_t i = 0; i < s.particles.size(); ++i)
    if (s.particles[i].alive) {
      alive.push_back(i);
      ++by_strategy[s.particles[i].strategy];
    }
  if (alive != s.alive_ids) throw UsageError("alive id list drifted");
  if (by_strategy != s.alive_by_strategy) throw UsageError("alive-by-strategy counts drifted");
}

}  // namespace dpd
