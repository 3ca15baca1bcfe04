#include <cmath>

#include "doctest.h"
#include "sgmcmc/oracle.hpp"

using namespace sgmcmc;

TEST_CASE("quantile_grad arithmetic and strict indicator") {
  CHECK(quantile_grad(0.0, 1.0, 0.95, 1e-5) == doctest::Approx(-0.95));
  CHECK(quantile_grad(0.0, -1.0, 0.95, 1e-5) == doctest::Approx(0.05));
  // boundary x = theta: indicator off
  CHECK(quantile_grad(2.0, 2.0, 0.5, 0.25) == doctest::Approx(0.5));
}

TEST_CASE("true quantiles match the closed forms") {
  CHECK(true_quantile(TargetDistribution::logistic(0.0, 1.0), 0.95) ==
        doctest::Approx(std::log(19.0)).epsilon(1e-14));
  CHECK(true_quantile(TargetDistribution::gumbel(0.0, 1.0), 0.95) ==
        doctest::Approx(-std::log(-std::log(0.95))).epsilon(1e-14));
  // three-decimal table values
  CHECK(true_quantile(TargetDistribution::logistic(0.0, 1.0), 0.95) ==
        doctest::Approx(2.944).epsilon(5e-4));
  CHECK(true_quantile(TargetDistribution::gumbel(0.0, 1.0), 0.95) ==
        doctest::Approx(2.970).epsilon(5e-4));
  CHECK(true_quantile(TargetDistribution::gaussian(-1.0, 1.0), 0.95) ==
        doctest::Approx(0.645).epsilon(5e-4));
  CHECK_THROWS_AS(true_quantile(TargetDistribution::gaussian(0.0, 1.0), 1.5),
                  std::invalid_argument);
}

TEST_CASE("gaussian inverse CDF self-consistency") {
  const TargetDistribution g = TargetDistribution::gaussian(0.0, 1.0);
  // round-trip cdf(quantile(q)) = q over a grid, needs ~1e-9 accuracy
  for (double q : {1e-6, 1e-3, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999, 1.0 - 1e-6}) {
    CHECK(g.cdf(g.quantile(q)) == doctest::Approx(q).epsilon(1e-9));
  }
}

TEST_CASE("inverse-CDF sampling hits known points") {
  CHECK(TargetDistribution::logistic(0.0, 1.0).quantile(0.5) == doctest::Approx(0.0));
  CHECK(TargetDistribution::gumbel(0.0, 1.0).quantile(std::exp(-1.0)) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("empirical mean of gaussian draws") {
  const TargetDistribution g = TargetDistribution::gaussian(3.0, 5.0);
  RngStream rng(123, 0, 0);
  const std::size_t n = 1000000;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += sample_dist(g, rng);
  CHECK(std::fabs(s / n - 3.0) <= 0.02);  // 4*sigma/sqrt(n)
}

TEST_CASE("quantile oracle unbiasedness by Monte Carlo") {
  QuantileProblem prob(TargetDistribution::logistic(0.0, 1.0), 0.95, 1e-5);
  QuantileOracle oracle(prob);
  RngStream rng(7, 0, 0);
  const std::size_t n = 1000000;
  for (double theta : {-1.0, 0.0, 2.0}) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += oracle.eval_H({theta}, oracle.draw_sample(rng))[0];
    }
    const double exact = oracle.exact_mean_grad({theta})[0];
    CHECK(std::fabs(s / n - exact) <= 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("continuity in average with the derived Lipschitz constant") {
  // E|H(theta,X) - H(theta',X)| <= L|theta-theta'| + 3*SE with
  // L = 2*(lambda_r + density_sup).
  const double lambda_r = 1e-5;
  const TargetDistribution dists[] = {TargetDistribution::gaussian(0.0, 1.0),
                                      TargetDistribution::logistic(0.0, 1.0),
                                      TargetDistribution::gumbel(0.0, 1.0)};
  RngStream pair_rng(21, 0, 0);
  for (const auto& dist : dists) {
    QuantileOracle oracle(QuantileProblem(dist, 0.95, lambda_r));
    const double L = 2.0 * (lambda_r + dist.density_sup());
    for (int rep = 0; rep < 20; ++rep) {
      const double t1 = (2.0 * pair_rng.next_uniform() - 1.0) * 3.0;
      const double t2 = (2.0 * pair_rng.next_uniform() - 1.0) * 3.0;
      RngStream data_rng(22, static_cast<std::uint64_t>(rep), 0);
      const std::size_t n = 20000;
      double s = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec x = oracle.draw_sample(data_rng);
        const double d = std::fabs(oracle.eval_H({t1}, x)[0] - oracle.eval_H({t2}, x)[0]);
        s += d;
        s2 += d * d;
      }
      const double mean = s / n;
      const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
      CHECK(mean <= L * std::fabs(t1 - t2) + 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("dissipativity identity for the quantile oracle") {
  QuantileProblem prob(TargetDistribution::gumbel(0.0, 2.0), 0.95, 1e-5);
  QuantileOracle oracle(prob);
  RngStream rng(31, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const double theta = (2.0 * rng.next_uniform() - 1.0) * 10.0;
    const Vec x = oracle.draw_sample(rng);
    const double lhs = theta * oracle.eval_F({theta}, x)[0];
    CHECK(lhs == doctest::Approx(2.0 * prob.lambda_r * theta * theta).epsilon(1e-12));
  }
}

TEST_CASE("G stays bounded by 2 for the quantile oracle") {
  QuantileOracle oracle(QuantileProblem(TargetDistribution::gaussian(1.0, 2.0), 0.99, 1e-5));
  RngStream rng(41, 0, 0);
  for (int i = 0; i < 10000; ++i) {
    const double theta = (2.0 * rng.next_uniform() - 1.0) * 50.0;
    const Vec x = oracle.draw_sample(rng);
    CHECK(std::fabs(oracle.eval_G({theta}, x)[0]) <= 2.0);
  }
}

TEST_CASE("H = F + G elementwise") {
  QuantileOracle oracle(QuantileProblem(TargetDistribution::logistic(-1.0, 1.0), 0.9, 1e-4));
  RngStream rng(51, 0, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec theta = {4.0 * rng.next_uniform() - 2.0};
    const Vec x = oracle.draw_sample(rng);
    CHECK(oracle.eval_H(theta, x)[0] ==
          doctest::Approx(oracle.eval_F(theta, x)[0] + oracle.eval_G(theta, x)[0]));
  }
}

TEST_CASE("quadratic oracle") {
  SUBCASE("deterministic H") {
    QuadraticOracle oracle(1.0, 0.0);
    CHECK(oracle.eval_H({2.0}, {0.0})[0] == doctest::Approx(2.0));
    CHECK(oracle.exact_mean_grad({0.0})[0] == doctest::Approx(0.0));
  }
  SUBCASE("Monte Carlo unbiasedness") {
    QuadraticOracle oracle(2.0, 1.0);
    RngStream rng(61, 0, 0);
    const std::size_t n = 100000;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += oracle.eval_H({1.0}, oracle.draw_sample(rng))[0];
    CHECK(std::fabs(s / n - 2.0) <= 0.02);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(TargetDistribution::gaussian(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantileProblem(TargetDistribution::gaussian(0.0, 1.0), 1.2, 1e-5),
                  std::invalid_argument);
  CHECK_THROWS_AS(QuadraticOracle(-1.0, 0.0), std::invalid_argument);
}
