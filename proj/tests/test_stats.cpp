#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dpd/stats.hpp"

using namespace dpd;

TEST_CASE("mean and sample variance basics", "[stats]") {
  std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  CHECK(mean(xs) == 2.5);
  CHECK(sample_variance(xs) == Catch::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(mean({}), UsageError);
  CHECK_THROWS_AS(sample_variance({1.0}), UsageError);
}

TEST_CASE("jackknife of the mean matches the classical standard error", "[stats]") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> xs(40);
  for (auto& x : xs) x = normal(gen);
  double total = 0.0;
  for (double x : xs) total += x;
  std::size_t n = xs.size();
  double se = jackknife_se(n, [&](std::size_t skip) {
    return (total - xs[skip]) / static_cast<double>(n - 1);
  });
  CHECK(se == Catch::Approx(std::sqrt(sample_variance(xs) / static_cast<double>(n))).epsilon(1e-12));
}

TEST_CASE("pair covariance on an exact hand case", "[stats]") {
  // x = (1,2,3), y = 2x: covariance 2, leave-one-out values (1, 4, 1), SE = 2.
  CovEstimate c = pair_covariance({{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}});
  CHECK(c.estimate == 2.0);
  CHECK(c.se == 2.0);
}

TEST_CASE("pair covariance degenerate inputs", "[stats]") {
  CHECK_THROWS_AS(pair_covariance({{1.0, 1.0}}), UsageError);
  CovEstimate two = pair_covariance({{0.0, 0.0}, {1.0, 1.0}});
  CHECK(two.estimate == 0.5);
  CHECK(std::isnan(two.se));
  CovEstimate flat = pair_covariance({{3.0, 7.0}, {3.0, 7.0}, {3.0, 7.0}, {3.0, 7.0}});
  CHECK(flat.estimate == 0.0);
  CHECK(flat.se == 0.0);
}

TEST_CASE("pair covariance recovers bernoulli variance", "[stats]") {
  // Y = X with X ~ Bernoulli(p): Cov(X, Y) = p(1-p).
  std::mt19937_64 gen(77);
  std::bernoulli_distribution coin(0.3);
  std::vector<std::pair<double, double>> reps;
  for (int i = 0; i < 20000; ++i) {
    double x = coin(gen) ? 1.0 : 0.0;
    reps.emplace_back(x, x);
  }
  CovEstimate c = pair_covariance(reps);
  double truth = 0.3 * 0.7;
  REQUIRE(c.se > 0.0);
  CHECK(std::abs(c.estimate - truth) < 3.0 * c.se);
  // the jackknife error bar should be in the right ballpark for Bernoulli:
  // Var(X Y) contributions give se ~ sqrt(p(1-p)(1-2p(1-p)))/sqrt(n) up to O(1/n).
  CHECK(c.se < 1e-2);
}

TEST_CASE("pair covariance of independent replicas is consistent with zero", "[stats]") {
  std::mt19937_64 gen(1234);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::pair<double, double>> reps;
  for (int i = 0; i < 5000; ++i) reps.emplace_back(normal(gen), normal(gen));
  CovEstimate c = pair_covariance(reps);
  REQUIRE(c.se > 0.0);
  CHECK(std::abs(c.estimate) < 3.0 * c.se);
}

TEST_CASE("log-log slope recovers exact power laws", "[stats]") {
  std::vector<double> xs = {8.0, 32.0, 128.0, 512.0};
  std::vector<double> ys, flat;
  for (double x : xs) {
    ys.push_back(3.5 * std::pow(x, -0.75));
    flat.push_back(2.0);
  }
  CHECK(loglog_slope(xs, ys) == Catch::Approx(-0.75).margin(1e-12));
  CHECK(loglog_slope(xs, flat) == Catch::Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0, -2.0}), UsageError);
  CHECK_THROWS_AS(loglog_slope({4.0, 4.0}, {1.0, 2.0}), UsageError);
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), UsageError);
}
