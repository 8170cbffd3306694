#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <set>
#include <unordered_map>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/game.hpp"
#include "dpd/rational.hpp"

namespace dpd {

// Enumerated alive wealth support per strategy, closed under one game step up
// to the truncation boundary. Jumps that would leave the enumerated set are
// suppressed in the drift (both the inflow and the matching outflow), so mass
// stays conserved exactly and the bias is bounded by tail_budget.
struct LatticeSpec {
  std::vector<std::vector<std::int64_t>> wealth;  // per strategy, sorted, numerators on 1/q
  std::vector<std::unordered_map<std::int64_t, std::uint32_t>> index;
  std::vector<std::int64_t> death_num;  // dead iff numerator <= death_num[strategy]
  std::int64_t q = 1;
  int k_max = 0;         // jump budget from the Poisson tail bound
  double tail_budget = 0.0;  // P(Poisson(kappa*T) > k_max), the a priori error

  bool alive_value(int strategy, std::int64_t num) const { return num > death_num[strategy]; }
};

// Probability masses on the alive lattice plus one absorbing dead compartment
// per strategy. Also reused as the derivative container.
struct MeanFieldState {
  std::vector<std::vector<double>> alive;  // aligned with LatticeSpec::wealth
  std::vector<double> dead;
  double time = 0.0;
};

inline double alive_mass(const MeanFieldState& s, int strategy) {
  double total = 0.0;
  for (double m : s.alive[strategy]) total += m;
  return total;
}

inline double total_mass(const MeanFieldState& s) {
  double total = 0.0;
  for (const auto& v : s.alive)
    for (double m : v) total += m;
  for (double m : s.dead) total += m;
  return total;
}

// Smallest k with P(Poisson(mean) > k) < bound, plus the achieved tail.
inline std::pair<int, double> poisson_tail_budget(double mean, double bound) {
  if (bound < 1e-15)
    throw ConfigError("truncation epsilon too small to resolve in double precision");
  if (mean <= 0.0) return {0, 0.0};
  double pmf = std::exp(-mean);
  double cdf = pmf;
  int k = 0;
  while (1.0 - cdf >= bound) {
    ++k;
    pmf *= mean / k;
    cdf += pmf;
    if (k > 1000000) throw ConfigError("truncation budget unreachable; increase epsilon");
  }
  return {k, 1.0 - cdf};
}

namespace detail {

// Distinct one-game wealth increments per focal strategy, restricted to
// partner strategies that carry alive mass at time zero. Alive mass per
// strategy can only shrink, so absent partners stay absent and their jumps
// never fire.
inline std::vector<std::vector<std::int64_t>> jump_deltas(const GameSpec& game,
                                                          const std::vector<char>& partner_present) {
  std::vector<std::vector<std::int64_t>> deltas(game.strategy_count());
  if (game.mode == GameMode::pd) {
    if (partner_present[kCooperate]) {
      deltas[kCooperate].push_back(game.pd.R.num);
      deltas[kDefect].push_back(game.pd.T.num);
    }
    if (partner_present[kDefect]) {
      deltas[kCooperate].push_back(-game.pd.S.num);
      deltas[kDefect].push_back(-2 * game.pd.P.num);
    }
    return deltas;
  }
  const GeneralGame& g = game.general;
  std::set<int> partner_actions;
  for (int k = 0; k < g.L; ++k) {
    if (!partner_present[k]) continue;
    for (int b = 0; b < g.a; ++b)
      if (g.alpha[k][b] > Rational(0)) partner_actions.insert(b);
  }
  for (int l = 0; l < g.L; ++l) {
    std::set<std::int64_t> own;
    for (int b = 0; b < g.a; ++b) {
      if (!(g.alpha[l][b] > Rational(0))) continue;
      for (int bp : partner_actions) {
        std::int64_t d = g.payoff(b, bp).num;
        if (d != 0) own.insert(d);
      }
    }
    deltas[l].assign(own.begin(), own.end());
  }
  return deltas;
}

}  // namespace detail

// Breadth-first closure of the initial atoms under game jumps, cut at the
// k_max implied by P(Poisson(kappa*T) > k_max) < epsilon/10.
inline LatticeSpec build_lattice(const std::vector<InitAtom>& atoms, const GameSpec& game,
                                 double horizon, double kappa, double epsilon,
                                 std::size_t size_cap = 2000000) {
  if (epsilon <= 0) throw ConfigError("truncation epsilon must be positive");
  LatticeSpec lat;
  lat.q = game.q;
  const int n_strat = game.strategy_count();
  lat.wealth.assign(n_strat, {});
  lat.index.assign(n_strat, {});
  lat.death_num.assign(n_strat, 0);
  for (int z = 0; z < n_strat; ++z)
    lat.death_num[z] = game.mode == GameMode::pd ? 0 : game.general.death_threshold[z].num;

  auto [k_max, tail] = poisson_tail_budget(kappa * horizon, epsilon / 10.0);
  lat.k_max = k_max;
  lat.tail_budget = tail;

  std::vector<char> partner_present(n_strat, 0);
  for (const auto& a : atoms) {
    if (a.wealth.den != game.q) throw ConfigError("initial.atoms: wealth off the run lattice");
    if (a.prob > Rational(0) && game.is_alive(a.wealth, a.strategy))
      partner_present[a.strategy] = 1;
  }
  auto deltas = detail::jump_deltas(game, partner_present);

  std::size_t count = 0;
  std::vector<std::set<std::int64_t>> found(n_strat);
  std::queue<std::tuple<int, std::int64_t, int>> frontier;  // (strategy, wealth, depth)
  for (const auto& a : atoms) {
    if (!(a.prob > Rational(0)) || !game.is_alive(a.wealth, a.strategy)) continue;
    if (found[a.strategy].insert(a.wealth.num).second) {
      ++count;
      frontier.push({a.strategy, a.wealth.num, 0});
    }
  }
  while (!frontier.empty()) {
    auto [z, w, depth] = frontier.front();
    frontier.pop();
    if (depth == k_max) continue;
    for (std::int64_t d : deltas[z]) {
      std::int64_t w2 = checked_add(w, d);
      if (!lat.alive_value(z, w2)) continue;  // lands dead; no lattice node needed
      if (!found[z].insert(w2).second) continue;
      if (++count > size_cap)
        throw ConfigError("wealth lattice exceeds size cap; increase truncation epsilon");
      frontier.push({z, w2, depth + 1});
    }
  }
  for (int z = 0; z < n_strat; ++z) {
    lat.wealth[z].assign(found[z].begin(), found[z].end());
    for (std::uint32_t i = 0; i < lat.wealth[z].size(); ++i) lat.index[z][lat.wealth[z][i]] = i;
  }
  return lat;
}

// Atom masses placed on the lattice; atoms in the death region load the dead
// compartment directly.
inline MeanFieldState initial_state(const LatticeSpec& lat, const GameSpec& game,
                                    const std::vector<InitAtom>& atoms) {
  atom_cdf(atoms, game.strategy_count());  // validates weights
  MeanFieldState s;
  s.alive.resize(lat.wealth.size());
  for (std::size_t z = 0; z < lat.wealth.size(); ++z) s.alive[z].assign(lat.wealth[z].size(), 0.0);
  s.dead.assign(lat.wealth.size(), 0.0);
  for (const auto& a : atoms) {
    double p = a.prob.value();
    if (p == 0.0) continue;
    if (!game.is_alive(a.wealth, a.strategy)) {
      s.dead[a.strategy] += p;
      continue;
    }
    s.alive[a.strategy][lat.index[a.strategy].at(a.wealth.num)] += p;
  }
  return s;
}

// One jump channel of the master equation: a focal particle of strategy z
// meets an alive partner of strategy `partner` and its wealth moves by delta;
// weight carries the action probabilities (and the 1/2 of the PD coin).
struct JumpTable {
  struct Jump {
    std::int64_t delta = 0;
    int partner = 0;
    double weight = 1.0;
  };
  std::vector<std::vector<Jump>> jumps;  // per focal strategy
};

inline JumpTable pd_jump_table(const PDPayoffs& p) {
  JumpTable t;
  t.jumps.resize(2);
  t.jumps[kCooperate] = {{p.R.num, kCooperate, 1.0}, {-p.S.num, kDefect, 1.0}};
  // D vs D: the coin selects the focal particle with probability 1/2;
  // the other half of the attempts leave it untouched.
  t.jumps[kDefect] = {{p.T.num, kCooperate, 1.0}, {-2 * p.P.num, kDefect, 0.5}};
  return t;
}

inline JumpTable general_jump_table(const GeneralGame& g) {
  JumpTable t;
  t.jumps.resize(g.L);
  for (int l = 0; l < g.L; ++l) {
    // aggregate weight by (partner strategy, delta)
    std::vector<std::unordered_map<std::int64_t, double>> by_partner(g.L);
    for (int k = 0; k < g.L; ++k)
      for (int b = 0; b < g.a; ++b) {
        double wb = g.alpha[l][b].value();
        if (wb == 0.0) continue;
        for (int bp = 0; bp < g.a; ++bp) {
          double wp = g.alpha[k][bp].value();
          if (wp == 0.0) continue;
          std::int64_t d = g.payoff(b, bp).num;
          if (d == 0) continue;  // a zero payoff changes nothing
          by_partner[k][d] += wb * wp;
        }
      }
    for (int k = 0; k < g.L; ++k) {
      std::vector<std::int64_t> keys;
      for (const auto& [d, w] : by_partner[k]) keys.push_back(d);
      std::sort(keys.begin(), keys.end());
      for (std::int64_t d : keys) t.jumps[l].push_back({d, k, by_partner[k][d]});
    }
  }
  return t;
}

// Master-equation right-hand side as paired fluxes: every unit of outflow
// lands either on another lattice state or in the dead compartment, so the
// derivative sums to zero up to rounding. Jumps whose alive target fell
// beyond the truncation are suppressed together with their outflow.
inline void eval_drift(const MeanFieldState& s, const LatticeSpec& lat, const JumpTable& table,
                       double kappa, MeanFieldState& deriv) {
  const std::size_t n_strat = lat.wealth.size();
  deriv.alive.resize(n_strat);
  for (std::size_t z = 0; z < n_strat; ++z) deriv.alive[z].assign(lat.wealth[z].size(), 0.0);
  deriv.dead.assign(n_strat, 0.0);
  deriv.time = 0.0;

  std::vector<double> a(n_strat);
  for (std::size_t z = 0; z < n_strat; ++z) a[z] = alive_mass(s, static_cast<int>(z));

  for (std::size_t z = 0; z < n_strat; ++z) {
    for (std::uint32_t i = 0; i < lat.wealth[z].size(); ++i) {
      double m = s.alive[z][i];
      if (m == 0.0) continue;
      std::int64_t w = lat.wealth[z][i];
      for (const auto& jump : table.jumps[z]) {
        double rate = kappa * jump.weight * a[jump.partner];
        if (rate == 0.0) continue;
        double flow = rate * m;
        std::int64_t w2 = w + jump.delta;
        if (!lat.alive_value(static_cast<int>(z), w2)) {
          deriv.dead[z] += flow;
          deriv.alive[z][i] -= flow;
          continue;
        }
        auto it = lat.index[z].find(w2);
        if (it == lat.index[z].end()) continue;  // truncation boundary
        deriv.alive[z][it->second] += flow;
        deriv.alive[z][i] -= flow;
      }
    }
  }
}

// Evolution equations specialized to the PD mean field, with z = 0 gaining R
// against cooperators and the defector self-punishment entering at half rate.
inline MeanFieldState drift(const MeanFieldState& s, const LatticeSpec& lat, const PDPayoffs& p,
                            double kappa) {
  MeanFieldState d;
  eval_drift(s, lat, pd_jump_table(p), kappa, d);
  return d;
}

inline MeanFieldState general_drift(const MeanFieldState& s, const LatticeSpec& lat,
                                    const GeneralGame& g, double kappa) {
  MeanFieldState d;
  eval_drift(s, lat, general_jump_table(g), kappa, d);
  return d;
}

using DriftFn = std::function<void(const MeanFieldState&, MeanFieldState&)>;

inline DriftFn make_drift(const LatticeSpec& lat, const GameSpec& game, double kappa) {
  JumpTable table =
      game.mode == GameMode::pd ? pd_jump_table(game.pd) : general_jump_table(game.general);
  return [&lat, table = std::move(table), kappa](const MeanFieldState& s, MeanFieldState& d) {
    eval_drift(s, lat, table, kappa, d);
  };
}

namespace detail {

inline MeanFieldState saxpy(const MeanFieldState& s, double h, const MeanFieldState& d) {
  MeanFieldState out = s;
  for (std::size_t z = 0; z < out.alive.size(); ++z)
    for (std::size_t i = 0; i < out.alive[z].size(); ++i) out.alive[z][i] += h * d.alive[z][i];
  for (std::size_t z = 0; z < out.dead.size(); ++z) out.dead[z] += h * d.dead[z];
  return out;
}

}  // namespace detail

// Classical fixed-step RK4; fixed steps keep runs bit-reproducible. The mass
// total is structurally conserved (the drift sums to zero), so a deviation
// means the step size let the stage states blow up.
inline MeanFieldState rk4_step(const MeanFieldState& s, double dt, const DriftFn& f) {
  if (!(dt > 0)) throw UsageError("rk4_step: dt must be positive");
  double before = total_mass(s);
  MeanFieldState k1, k2, k3, k4;
  f(s, k1);
  f(detail::saxpy(s, dt / 2, k1), k2);
  f(detail::saxpy(s, dt / 2, k2), k3);
  f(detail::saxpy(s, dt, k3), k4);
  MeanFieldState out = s;
  for (std::size_t z = 0; z < out.alive.size(); ++z)
    for (std::size_t i = 0; i < out.alive[z].size(); ++i)
      out.alive[z][i] += dt / 6 * (k1.alive[z][i] + 2 * k2.alive[z][i] + 2 * k3.alive[z][i] +
                                   k4.alive[z][i]);
  for (std::size_t z = 0; z < out.dead.size(); ++z)
    out.dead[z] += dt / 6 * (k1.dead[z] + 2 * k2.dead[z] + 2 * k3.dead[z] + k4.dead[z]);
  out.time = s.time + dt;
  double after = total_mass(out);
  if (!std::isfinite(after) || std::abs(after - before) > 1e-9)
    throw IntegrationError("mass conservation lost; decrease dt");
  return out;
}

// Integrates to `horizon` with steps of at most dt, shortening steps to land
// exactly on each snapshot time. Returns the state at every snapshot time
// (and nothing else).
inline std::vector<MeanFieldState> integrate(MeanFieldState state, double horizon, double dt,
                                             std::vector<double> snapshot_times,
                                             const DriftFn& f) {
  if (!(dt > 0)) throw UsageError("integrate: dt must be positive");
  if (std::abs(total_mass(state) - 1.0) > 1e-9)
    throw UsageError("integrate: initial mass must be normalized");
  std::sort(snapshot_times.begin(), snapshot_times.end());
  for (double t : snapshot_times)
    if (t < state.time || t > horizon + 1e-12)
      throw UsageError("integrate: snapshot time outside [start, horizon]");

  std::vector<MeanFieldState> out;
  for (double target : snapshot_times) {
    while (target - state.time > 1e-12) {
      double h = std::min(dt, target - state.time);
      state = rk4_step(state, h, f);
    }
    state.time = target;
    out.push_back(state);
  }
  while (horizon - state.time > 1e-12) {
    double h = std::min(dt, horizon - state.time);
    state = rk4_step(state, h, f);
  }
  return out;
}

}  // namespace dpd
