#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpd/matching.hpp"

using namespace dpd;

namespace {

GameSpec demo_game(std::int64_t q = 1) {
  return GameSpec::prisoners_dilemma(Rational(2), Rational(3), Rational(4), Rational(1), q);
}

ParticleState mk(std::int64_t wealth, std::uint8_t strategy, std::int64_t q = 1) {
  return ParticleState{0, make_amount(wealth, 1, q), strategy, wealth > 0};
}

bool same_state(const ParticleState& a, const ParticleState& b) {
  return a.wealth.num == b.wealth.num && a.strategy == b.strategy && a.alive == b.alive;
}

}  // namespace

TEST_CASE("init from a point mass", "[matching]") {
  GameSpec g = demo_game();
  std::vector<InitAtom> nu = {{make_amount(3, 1, 1), kCooperate, Rational(1)}};
  auto s = init_matching(g, 10, 1.0, false, nu, 5);
  REQUIRE(s.particles.size() == 10);
  for (const auto& p : s.particles) {
    CHECK(p.wealth.num == 3);
    CHECK(p.strategy == kCooperate);
    CHECK(p.alive);
  }
  CHECK(s.alive_ids.size() == 10);
  CHECK(s.alive_by_strategy[kCooperate] == 10);
  CHECK(s.alive_by_strategy[kDefect] == 0);
  check_consistency(s);
}

TEST_CASE("slowed pair rate divides by N", "[matching]") {
  GameSpec g = demo_game();
  std::vector<InitAtom> nu = {{make_amount(1, 1, 1), kCooperate, Rational(1)}};
  auto slowed = init_matching(g, 4, 1.0, true, nu, 5);
  CHECK(slowed.pair_rate == 0.25);
  CHECK(matching_total_rate(slowed) == 0.25 * 6);  // C(4,2) pairs
  auto plain = init_matching(g, 4, 1.0, false, nu, 5);
  CHECK(plain.pair_rate == 1.0);
}

TEST_CASE("an all-dead start never fires", "[matching]") {
  GameSpec g = demo_game();
  std::vector<InitAtom> nu = {{make_amount(-2, 1, 1), kDefect, Rational(1)}};
  auto s = init_matching(g, 6, 1.0, false, nu, 5);
  CHECK(s.alive_ids.empty());
  CHECK(matching_total_rate(s) == 0.0);
  Event ev = advance_matching(s);
  CHECK(ev.kind == EventKind::none);
  for (const auto& p : s.particles) CHECK(p.wealth.num == 0);  // PD clamp at init
}

TEST_CASE("single survivor has no partner", "[matching]") {
  GameSpec g = demo_game();
  auto s = init_matching(g, 1.0, false, {mk(5, kCooperate)}, 5);
  CHECK(matching_total_rate(s) == 0.0);
  CHECK(advance_matching(s).kind == EventKind::none);
}

TEST_CASE("DD coin picks the victim by u1", "[matching]") {
  GameSpec g = demo_game();
  auto s = init_matching(g, 1.0, false, {mk(5, kDefect), mk(5, kDefect)}, 5);
  Event head{0.1, EventKind::game, 0, 1, 0.2, 0.9};  // u1 < 1/2: head hits player a
  apply_matching_event(s, head);
  CHECK(s.particles[0].wealth.num == 3);  // -2P = -2
  CHECK(s.particles[1].wealth.num == 5);

  Event tail{0.1, EventKind::game, 0, 1, 0.7, 0.1};
  apply_matching_event(s, tail);
  CHECK(s.particles[0].wealth.num == 3);
  CHECK(s.particles[1].wealth.num == 3);
  CHECK(s.counts.games_dd == 2);
  check_consistency(s);
}

TEST_CASE("death updates the alive index", "[matching]") {
  GameSpec g = demo_game();
  auto s = init_matching(g, 1.0, false, {mk(1, kCooperate), mk(9, kDefect), mk(9, kCooperate)}, 5);
  // defector 1 exploits cooperator 0: payoff -S = -3 kills it
  Event ev{0.5, EventKind::game, 1, 0, 0.3, 0.3};
  apply_matching_event(s, ev);
  CHECK_FALSE(s.particles[0].alive);
  CHECK(s.particles[0].wealth.num == 0);
  CHECK(s.particles[1].wealth.num == 13);  // +T = +4
  CHECK(s.alive_ids == std::vector<std::uint32_t>{1, 2});
  CHECK(s.alive_by_strategy[kCooperate] == 1);
  CHECK(s.alive_by_strategy[kDefect] == 1);
  check_consistency(s);
  // any further game naming the dead particle is rejected
  CHECK_THROWS_AS(apply_matching_event(s, ev), UsageError);
}

TEST_CASE("all-cooperator wealth is an exact game-count ledger", "[matching]") {
  const std::int64_t q = 3;  // R = 1/3 exercises fractional payoffs
  GameSpec g = GameSpec::prisoners_dilemma(Rational(1, 3), Rational(3), Rational(4), Rational(1), q);
  std::vector<InitAtom> nu = {{make_amount(1, 1, q), kCooperate, Rational(1)}};
  auto s = init_matching(g, 8, 2.0, false, nu, 77);
  Trajectory traj = run_matching(s, 5.0, {});
  REQUIRE(traj.counts.games() > 100);
  for (std::size_t i = 0; i < 8; ++i) {
    // wealth = w0 + R * games(i), exactly, on the 1/3 lattice
    std::int64_t expect = 3 + static_cast<std::int64_t>(traj.games_per_particle[i]);
    CHECK(s.particles[i].wealth.num == expect);
  }
  check_consistency(s);
}

TEST_CASE("per-particle game counts are Poisson with the predicted mean", "[matching]") {
  // Slowed, all cooperators: each particle plays at rate pair_rate * (N-1).
  GameSpec g = demo_game();
  const std::uint32_t n = 20;
  const double lm = 1.0, t = 2.0;
  const int reps = 150;
  std::vector<InitAtom> nu = {{make_amount(1, 1, 1), kCooperate, Rational(1)}};
  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = init_matching(g, n, lm, true, nu, derive_seed(909, {static_cast<std::uint64_t>(r)}));
    Trajectory traj = run_matching(s, t, {});
    for (auto c : traj.games_per_particle) {
      double x = static_cast<double>(c);
      sum += x;
      sumsq += x * x;
      ++count;
    }
  }
  double mean = sum / count;
  double var = sumsq / count - mean * mean;
  double expected = (lm / n) * (n - 1) * t;  // 1.9
  // within-replica correlation: treat each replica as one effective sample
  double se_mean = std::sqrt(expected / reps);
  CHECK(std::abs(mean - expected) <= 3.0 * se_mean);
  CHECK(std::abs(var - expected) <= 6.0 * se_mean);
}

TEST_CASE("alive count never increases and strategies never change", "[matching]") {
  GameSpec g = demo_game();
  std::vector<ParticleState> states;
  for (int i = 0; i < 12; ++i) states.push_back(mk(1 + i % 3, i % 2 ? kDefect : kCooperate));
  auto s = init_matching(g, 2.0, false, states, 31337);
  std::vector<double> times;
  for (int k = 1; k <= 10; ++k) times.push_back(k * 0.4);
  Trajectory traj = run_matching(s, 4.0, times);

  std::size_t prev_alive = states.size();
  for (const auto& snap : traj.snapshots) {
    std::size_t alive = 0;
    int coop = 0;
    for (const auto& p : snap.particles) {
      alive += p.alive;
      coop += p.strategy == kCooperate;
    }
    CHECK(alive <= prev_alive);
    prev_alive = alive;
    CHECK(coop == 6);  // strategy multiset is conserved
  }
  CHECK(prev_alive < states.size());  // the config actually kills
  check_consistency(s);
}

TEST_CASE("replay equivariance under relabeling", "[matching]") {
  GameSpec g = demo_game();
  std::vector<ParticleState> states;
  for (int i = 0; i < 7; ++i) states.push_back(mk(1 + i % 4, i % 2 ? kDefect : kCooperate));
  auto sys = init_matching(g, 2.0, false, states, 5002);
  Trajectory traj = run_matching(sys, 4.0, {}, true);
  REQUIRE(traj.events.size() > 20);

  std::vector<std::uint32_t> sigma = {2, 6, 0, 4, 1, 5, 3};
  std::vector<ParticleState> permuted(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) permuted[sigma[i]] = states[i];
  auto sys2 = init_matching(g, 2.0, false, permuted, 1);
  for (const Event& ev : traj.events) {
    Event mapped = ev;
    mapped.a = sigma[ev.a];
    mapped.b = sigma[ev.b];
    apply_matching_event(sys2, mapped);
  }
  for (std::size_t i = 0; i < states.size(); ++i)
    CHECK(same_state(sys2.particles[sigma[i]], sys.particles[i]));
  check_consistency(sys2);
}

TEST_CASE("same seed reproduces the matching trajectory", "[matching]") {
  GameSpec g = demo_game();
  std::vector<InitAtom> nu = {{make_amount(2, 1, 1), kCooperate, Rational(1, 2)},
                              {make_amount(2, 1, 1), kDefect, Rational(1, 2)}};
  auto s1 = init_matching(g, 30, 1.0, true, nu, 606);
  auto s2 = init_matching(g, 30, 1.0, true, nu, 606);
  Trajectory t1 = run_matching(s1, 3.0, {1.5, 3.0}, true);
  Trajectory t2 = run_matching(s2, 3.0, {1.5, 3.0}, true);
  REQUIRE(t1.events.size() == t2.events.size());
  for (std::size_t k = 0; k < t1.events.size(); ++k) {
    CHECK(t1.events[k].dt == t2.events[k].dt);
    CHECK(t1.events[k].a == t2.events[k].a);
    CHECK(t1.events[k].b == t2.events[k].b);
  }
  for (std::size_t k = 0; k < t1.snapshots.size(); ++k)
    for (std::size_t i = 0; i < 30; ++i)
      CHECK(same_state(t1.snapshots[k].particles[i], t2.snapshots[k].particles[i]));
}
