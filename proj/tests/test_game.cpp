#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dpd/game.hpp"

using namespace dpd;

namespace {

PDPayoffs demo_payoffs(std::int64_t q = 1) {
  // R=2, S=3, T=4, P=1 satisfies T>R>0 and S>P>0.
  return make_pd_payoffs(Rational(2), Rational(3), Rational(4), Rational(1), q);
}

}  // namespace

TEST_CASE("pd payoff validation", "[game]") {
  CHECK_NOTHROW(demo_payoffs());
  // T <= R
  CHECK_THROWS_WITH(make_pd_payoffs(Rational(2), Rational(3), Rational(2), Rational(1), 1),
                    Catch::Matchers::ContainsSubstring("payoffs.T"));
  // S <= P
  CHECK_THROWS_WITH(make_pd_payoffs(Rational(2), Rational(1), Rational(4), Rational(1), 1),
                    Catch::Matchers::ContainsSubstring("payoffs.S"));
  CHECK_THROWS_WITH(make_pd_payoffs(Rational(0), Rational(3), Rational(4), Rational(1), 1),
                    Catch::Matchers::ContainsSubstring("payoffs.R"));
  CHECK_THROWS_WITH(make_pd_payoffs(Rational(2), Rational(3), Rational(4), Rational(0), 1),
                    Catch::Matchers::ContainsSubstring("payoffs.P"));
}

TEST_CASE("pd outcomes", "[game]") {
  PDPayoffs p = demo_payoffs();
  auto [cc_i, cc_j] = pd_outcome(kCooperate, kCooperate, true, p);
  CHECK(cc_i == p.R);
  CHECK(cc_j == p.R);

  auto [dc_i, dc_j] = pd_outcome(kDefect, kCooperate, false, p);
  CHECK(dc_i == p.T);
  CHECK(dc_j == -p.S);

  auto [cd_i, cd_j] = pd_outcome(kCooperate, kDefect, true, p);
  CHECK(cd_i == -p.S);
  CHECK(cd_j == p.T);

  auto [h_i, h_j] = pd_outcome(kDefect, kDefect, true, p);
  CHECK(h_i == -p.P.scaled(2));
  CHECK(h_j.num == 0);
  auto [t_i, t_j] = pd_outcome(kDefect, kDefect, false, p);
  CHECK(t_i.num == 0);
  CHECK(t_j == -p.P.scaled(2));
}

TEST_CASE("no outcome ever charges both players", "[game]") {
  PDPayoffs p = make_pd_payoffs(Rational(1, 2), Rational(7, 3), Rational(5), Rational(1, 6), 6);
  std::mt19937_64 gen(99);
  for (int i = 0; i < 10000; ++i) {
    std::uint8_t zi = gen() & 1, zj = gen() & 1;
    bool coin = gen() & 1;
    auto [di, dj] = pd_outcome(zi, zj, coin, p);
    CHECK_FALSE((di.num < 0 && dj.num < 0));
  }
}

TEST_CASE("general game validation", "[game]") {
  std::vector<Rational> flat = {Rational(1), Rational(2), Rational(3), Rational(4)};
  std::vector<std::vector<Rational>> good_alpha = {{Rational(1, 2), Rational(1, 2)}};
  std::vector<Rational> thr = {Rational(0)};

  CHECK_NOTHROW(make_general_game(2, flat, good_alpha, thr, 1));
  CHECK_THROWS_AS(make_general_game(0, {}, good_alpha, thr, 1), ConfigError);
  CHECK_THROWS_AS(make_general_game(2, {Rational(1)}, good_alpha, thr, 1), ConfigError);
  CHECK_THROWS_AS(make_general_game(2, flat, {{Rational(1, 2), Rational(1, 3)}}, thr, 1),
                  ConfigError);  // weights sum to 5/6
  CHECK_THROWS_AS(make_general_game(2, flat, {{Rational(3, 2), Rational(-1, 2)}}, thr, 1),
                  ConfigError);  // negative weight
  CHECK_THROWS_AS(make_general_game(2, flat, good_alpha, {}, 1), ConfigError);
}

TEST_CASE("general outcome with pure strategies is deterministic", "[game]") {
  // G rows/cols indexed 0,1; pure strategies select their own index.
  std::vector<Rational> flat = {Rational(10), Rational(20), Rational(30), Rational(40)};
  std::vector<std::vector<Rational>> alpha = {{Rational(1), Rational(0)},
                                              {Rational(0), Rational(1)}};
  GeneralGame g = make_general_game(2, flat, alpha, {Rational(0), Rational(0)}, 1);
  for (double u : {0.0, 0.3, 0.9999}) {
    auto [di, dj] = general_outcome(g, 0, 1, u, 1.0 - u - 1e-12);
    CHECK(di == make_amount(20, 1, 1));  // G(0,1)
    CHECK(dj == make_amount(30, 1, 1));  // G(1,0)
  }
}

TEST_CASE("cdf inversion picks actions in index order", "[game]") {
  std::vector<Rational> flat(9, Rational(0));
  std::vector<std::vector<Rational>> alpha = {{Rational(1, 2), Rational(1, 4), Rational(1, 4)}};
  GeneralGame g = make_general_game(3, flat, alpha, {Rational(0)}, 1);
  CHECK(g.draw_action(0, 0.25) == 0);
  CHECK(g.draw_action(0, 0.49999) == 0);
  CHECK(g.draw_action(0, 0.5) == 1);
  CHECK(g.draw_action(0, 0.74999) == 1);
  CHECK(g.draw_action(0, 0.75) == 2);
  CHECK(g.draw_action(0, 0.99999999) == 2);
}

TEST_CASE("pd embedding matches pd outcomes on non-DD profiles", "[game]") {
  // Oracle: pd_outcome. The embedded matrix shares every profile except (D,D).
  const std::int64_t q = 6;
  PDPayoffs p = make_pd_payoffs(Rational(1, 2), Rational(7, 3), Rational(5), Rational(1, 6), q);
  GeneralGame g = embed_pd(Rational(1, 2), Rational(7, 3), Rational(5), q);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::uint8_t zi = gen() & 1, zj = gen() & 1;
    if (zi == kDefect && zj == kDefect) continue;
    auto [pi, pj] = pd_outcome(zi, zj, true, p);
    auto [gi, gj] = general_outcome(g, zi, zj, unif(gen), unif(gen));
    CHECK(pi == gi);
    CHECK(pj == gj);
  }
}

TEST_CASE("apply_payoff pd death clamps wealth to zero", "[game]") {
  const std::int64_t q = 1;
  ParticleState p{0, make_amount(5, 1, q), kCooperate, true};

  ParticleState a = apply_payoff(p, make_amount(-2, 1, q), GameMode::pd);
  CHECK(a.wealth == make_amount(3, 1, q));
  CHECK(a.alive);

  ParticleState b{0, make_amount(1, 1, q), kCooperate, true};
  ParticleState dead = apply_payoff(b, make_amount(-3, 1, q), GameMode::pd);
  CHECK(dead.wealth.num == 0);
  CHECK_FALSE(dead.alive);

  // exact landing on zero also kills
  ParticleState c{0, make_amount(3, 1, q), kDefect, true};
  ParticleState dead2 = apply_payoff(c, make_amount(-3, 1, q), GameMode::pd);
  CHECK(dead2.wealth.num == 0);
  CHECK_FALSE(dead2.alive);
}

TEST_CASE("apply_payoff general death freezes wealth", "[game]") {
  const std::int64_t q = 1;
  GeneralGame g = embed_pd(Rational(2), Rational(3), Rational(4), q);
  ParticleState p{0, make_amount(1, 1, q), 0, true};
  ParticleState dead = apply_payoff(p, make_amount(-4, 1, q), GameMode::general, &g);
  CHECK(dead.wealth == make_amount(-3, 1, q));  // kept, not clamped
  CHECK_FALSE(dead.alive);

  CHECK_THROWS_AS(apply_payoff(p, make_amount(1, 1, q), GameMode::general, nullptr), UsageError);
}

TEST_CASE("dead particles never receive payoffs", "[game]") {
  const std::int64_t q = 1;
  ParticleState dead{0, make_amount(0, 1, q), kDefect, false};
  CHECK_THROWS_AS(apply_payoff(dead, make_amount(1, 1, q), GameMode::pd), UsageError);

  // death is absorbing under any stream of attempted payoffs
  std::mt19937_64 gen(3);
  ParticleState p{0, make_amount(1, 1, q), kDefect, true};
  p = apply_payoff(p, make_amount(-1, 1, q), GameMode::pd);
  REQUIRE_FALSE(p.alive);
  for (int i = 0; i < 10000; ++i) {
    std::int64_t amt = static_cast<std::int64_t>(gen() % 7) - 3;
    CHECK_THROWS_AS(apply_payoff(p, make_amount(amt, 1, q), GameMode::pd), UsageError);
    CHECK_FALSE(p.alive);
  }
}
