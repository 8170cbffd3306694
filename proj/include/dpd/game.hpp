#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/rational.hpp"

namespace dpd {

// PD strategy labels. Fixed for life; a particle never switches.
inline constexpr std::uint8_t kCooperate = 0;
inline constexpr std::uint8_t kDefect = 1;

enum class GameMode { pd, general };

// Prisoner's dilemma payoffs, all positive amounts entering as
//   (C,C) -> (+R,+R)   (C,D) -> (-S,+T)   (D,D) -> coin: (-2P,0) or (0,-2P).
struct PDPayoffs {
  Wealth R, S, T, P;
};

inline PDPayoffs make_pd_payoffs(const Rational& R, const Rational& S, const Rational& T,
                                 const Rational& P, std::int64_t q) {
  if (!(R > Rational(0))) throw ConfigError("payoffs.R: must be positive");
  if (!(P > Rational(0))) throw ConfigError("payoffs.P: must be positive");
  if (!(T > R)) throw ConfigError("payoffs.T: must exceed payoffs.R");
  if (!(S > P)) throw ConfigError("payoffs.S: must exceed payoffs.P");
  return PDPayoffs{make_amount(R, q), make_amount(S, q), make_amount(T, q), make_amount(P, q)};
}

// Symmetric matrix game with mixed strategies and per-strategy death domains
// (-inf, c_l]. A player of strategy l draws an action from alpha[l]; the row
// player choosing b against b' receives G(b,b'), the opponent G(b',b).
struct GeneralGame {
  int a = 0;                                  // action count
  int L = 0;                                  // strategy count
  std::vector<Wealth> G;                      // a*a row-major payoff matrix
  std::vector<std::vector<Rational>> alpha;   // L action distributions, exact
  std::vector<std::vector<double>> alpha_cdf; // cumulative weights for inversion
  std::vector<Wealth> death_threshold;        // dead iff wealth <= death_threshold[l]

  const Wealth& payoff(int b, int b_other) const { return G[static_cast<std::size_t>(b) * a + b_other]; }

  // Cumulative-weight inversion, actions in index order.
  int draw_action(int l, double u) const {
    const auto& cdf = alpha_cdf[l];
    for (int b = 0; b + 1 < a; ++b)
      if (u < cdf[b]) return b;
    return a - 1;
  }
};

inline GeneralGame make_general_game(int a, const std::vector<Rational>& payoff_entries,
                                     const std::vector<std::vector<Rational>>& alpha,
                                     const std::vector<Rational>& death_thresholds, std::int64_t q) {
  if (a < 1) throw ConfigError("game.actions: must be at least 1");
  if (payoff_entries.size() != static_cast<std::size_t>(a) * a)
    throw ConfigError("game.payoff_matrix: expected " + std::to_string(a * a) + " entries");
  const int L = static_cast<int>(alpha.size());
  if (L < 1) throw ConfigError("game.strategies: must be at least 1");
  if (L > 256) throw ConfigError("game.strategies: at most 256 supported");
  if (death_thresholds.size() != static_cast<std::size_t>(L))
    throw ConfigError("game.death_thresholds: expected one per strategy");

  GeneralGame g;
  g.a = a;
  g.L = L;
  g.G.reserve(payoff_entries.size());
  for (const auto& r : payoff_entries) g.G.push_back(make_amount(r, q));
  g.alpha = alpha;
  for (int l = 0; l < L; ++l) {
    if (alpha[l].size() != static_cast<std::size_t>(a))
      throw ConfigError("game.alpha[" + std::to_string(l) + "]: expected " + std::to_string(a) +
                        " weights");
    Rational sum(0);
    std::vector<double> cdf;
    for (const auto& w : alpha[l]) {
      if (w < Rational(0))
        throw ConfigError("game.alpha[" + std::to_string(l) + "]: negative weight");
      sum = sum + w;
      cdf.push_back(sum.value());
    }
    if (!(sum == Rational(1)))
      throw ConfigError("game.alpha[" + std::to_string(l) + "]: weights must sum to 1");
    g.alpha_cdf.push_back(std::move(cdf));
  }
  for (const auto& c : death_thresholds) g.death_threshold.push_back(make_amount(c, q));
  return g;
}

// The PD payoff matrix as a 2-action pure-strategy general game:
//   G = [[R, -S], [T, 0]], death domain (-inf, 0] for both strategies.
// Coincides with the PD engine on every profile except (D,D), where the PD
// coin rule is a genuinely different randomization.
inline GeneralGame embed_pd(const Rational& R, const Rational& S, const Rational& T,
                            std::int64_t q) {
  std::vector<Rational> entries = {R, Rational(0) - S, T, Rational(0)};
  std::vector<std::vector<Rational>> alpha = {{Rational(1), Rational(0)},
                                              {Rational(0), Rational(1)}};
  std::vector<Rational> thresholds = {Rational(0), Rational(0)};
  return make_general_game(2, entries, alpha, thresholds, q);
}

struct ParticleState {
  std::uint32_t position = 0;
  Wealth wealth{};
  std::uint8_t strategy = 0;
  bool alive = true;
};

// Payoff pair for one PD game between strategies z_i and z_j. The coin matters
// only for (D,D): head punishes the first player, tail the second.
inline std::pair<Wealth, Wealth> pd_outcome(std::uint8_t z_i, std::uint8_t z_j, bool coin_head,
                                            const PDPayoffs& p) {
  const Wealth zero{0, p.R.den};
  if (z_i == kCooperate && z_j == kCooperate) return {p.R, p.R};
  if (z_i == kCooperate && z_j == kDefect) return {-p.S, p.T};
  if (z_i == kDefect && z_j == kCooperate) return {p.T, -p.S};
  const Wealth punish = -p.P.scaled(2);
  return coin_head ? std::pair<Wealth, Wealth>{punish, zero}
                   : std::pair<Wealth, Wealth>{zero, punish};
}

// Payoff pair for one general game: action b from alpha[l_i] via u_i, action
// b' from alpha[l_j] via u_j; player i receives G(b,b'), player j G(b',b).
inline std::pair<Wealth, Wealth> general_outcome(const GeneralGame& g, std::uint8_t l_i,
                                                 std::uint8_t l_j, double u_i, double u_j) {
  const int b = g.draw_action(l_i, u_i);
  const int b_other = g.draw_action(l_j, u_j);
  return {g.payoff(b, b_other), g.payoff(b_other, b)};
}

// Either rule set, plus the shared wealth-lattice denominator q. Engines
// branch on mode only when resolving an outcome; sampling is identical.
struct GameSpec {
  GameMode mode = GameMode::pd;
  PDPayoffs pd{};
  GeneralGame general{};
  std::int64_t q = 1;

  static GameSpec prisoners_dilemma(const Rational& R, const Rational& S, const Rational& T,
                                    const Rational& P, std::int64_t q) {
    GameSpec s;
    s.mode = GameMode::pd;
    s.pd = make_pd_payoffs(R, S, T, P, q);
    s.q = q;
    return s;
  }
  static GameSpec general_game(GeneralGame g, std::int64_t q) {
    GameSpec s;
    s.mode = GameMode::general;
    s.general = std::move(g);
    s.q = q;
    return s;
  }

  int strategy_count() const { return mode == GameMode::pd ? 2 : general.L; }

  // Alive test for a freshly assigned wealth (used at initialization).
  bool is_alive(const Wealth& w, std::uint8_t strategy) const {
    if (mode == GameMode::pd) return w.positive();
    return w > general.death_threshold[strategy];
  }

  std::pair<Wealth, Wealth> outcome(std::uint8_t z_i, std::uint8_t z_j, double u1,
                                    double u2) const {
    if (mode == GameMode::pd) return pd_outcome(z_i, z_j, u1 < 0.5, pd);
    return general_outcome(general, z_i, z_j, u1, u2);
  }
};

// One atom of an initial product measure on wealth x strategy. Particles are
// drawn i.i.d. from the atom list, which keeps the initial law exchangeable.
struct InitAtom {
  Wealth wealth{};
  std::uint8_t strategy = 0;
  Rational prob{0};
};

inline std::vector<double> atom_cdf(const std::vector<InitAtom>& atoms, int strategy_count) {
  if (atoms.empty()) throw ConfigError("initial.atoms: empty");
  Rational sum(0);
  std::vector<double> cdf;
  for (const auto& a : atoms) {
    if (a.prob < Rational(0)) throw ConfigError("initial.atoms: negative probability");
    if (a.strategy >= strategy_count) throw ConfigError("initial.atoms: strategy out of range");
    sum = sum + a.prob;
    cdf.push_back(sum.value());
  }
  if (!(sum == Rational(1))) throw ConfigError("initial.atoms: probabilities must sum to 1");
  return cdf;
}

inline const InitAtom& draw_atom(const std::vector<InitAtom>& atoms,
                                 const std::vector<double>& cdf, double u) {
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k)
    if (u < cdf[k]) return atoms[k];
  return atoms.back();
}

// Credits delta to an alive particle and applies the death rule.
// PD: wealth reaching <= 0 is clamped to exactly 0 and the particle dies.
// General: entering (-inf, c_l] kills with the wealth kept as-is, frozen.
inline ParticleState apply_payoff(const ParticleState& p, const Wealth& delta, GameMode mode,
                                  const GeneralGame* game = nullptr) {
  if (!p.alive) throw UsageError("apply_payoff on a dead particle");
  ParticleState out = p;
  out.wealth = p.wealth + delta;
  if (mode == GameMode::pd) {
    if (!out.wealth.positive()) {
      out.wealth = Wealth{0, out.wealth.den};
      out.alive = false;
    }
  } else {
    if (game == nullptr) throw UsageError("apply_payoff: general mode needs the game");
    if (!(out.wealth > game->death_threshold[p.strategy])) out.alive = false;
  }
  return out;
}

}  // namespace dpd
