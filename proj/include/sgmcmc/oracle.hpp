#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "sgmcmc/linalg.hpp"
#include "sgmcmc/rng.hpp"

namespace sgmcmc {

// Data-generating laws used by the quantile experiments. Logistic and Gumbel
// use the scale convention of their textbook parameterizations; `loc` is the
// Gaussian mean / Logistic alpha / Gumbel mu, `scale` is sigma / beta.
struct TargetDistribution {
  enum class Kind { kGaussian, kLogistic, kGumbel };

  Kind kind = Kind::kGaussian;
  double loc = 0.0;
  double scale = 1.0;

  TargetDistribution() = default;
  TargetDistribution(Kind k, double l, double s) : kind(k), loc(l), scale(s) {
    if (!(scale > 0.0)) throw std::invalid_argument("TargetDistribution: scale must be > 0");
  }

  static TargetDistribution gaussian(double mu, double sigma) {
    return {Kind::kGaussian, mu, sigma};
  }
  static TargetDistribution logistic(double alpha, double beta_scale) {
    return {Kind::kLogistic, alpha, beta_scale};
  }
  static TargetDistribution gumbel(double mu, double beta_scale) {
    return {Kind::kGumbel, mu, beta_scale};
  }

  double cdf(double x) const;
  double pdf(double x) const;
  // Inverse CDF; rejects q outside (0,1).
  double quantile(double q) const;
  // Supremum of the density over the real line.
  double density_sup() const;
  // Standard deviation of the law (sigma-equivalent used for quadrature windows).
  double sigma_equivalent() const;
  double mean() const;
  std::string name() const;
};

// Inverse-CDF draw from dist; one uniform consumed per sample.
double sample_dist(const TargetDistribution& dist, RngStream& rng);

// True q-quantile of dist.
double true_quantile(const TargetDistribution& dist, double q);

// lambda_r = 0 is admitted here so the plain expected pinball loss can be
// evaluated; the sampling oracle below requires a strictly positive
// regularizer (it is its dissipativity constant).
struct QuantileProblem {
  TargetDistribution dist;
  double q = 0.95;
  double lambda_r = 1e-5;

  QuantileProblem() = default;
  QuantileProblem(TargetDistribution d, double q_in, double lr) : dist(d), q(q_in), lambda_r(lr) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("QuantileProblem: q must be in (0,1)");
    if (!(lambda_r >= 0.0)) throw std::invalid_argument("QuantileProblem: lambda_r must be >= 0");
  }
};

// Pinball-loss stochastic gradient: 2*lambda_r*theta - q + 1{x < theta}.
// The indicator is strict; x == theta contributes 0.
inline double quantile_grad(double theta, double x, double q, double lambda_r) {
  return 2.0 * lambda_r * theta - q + (x < theta ? 1.0 : 0.0);
}

// Stochastic gradient oracle H(theta, x) = F(theta, x) + G(theta, x).
// Oracles are immutable after construction and safe to share across chains;
// all randomness flows through the RngStream handed to draw_sample.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual std::size_t dim() const = 0;
  // Dimension of a data point x.
  virtual std::size_t sample_dim() const = 0;
  virtual Vec draw_sample(RngStream& rng) const = 0;
  virtual Vec eval_F(const Vec& theta, const Vec& x) const = 0;
  virtual Vec eval_G(const Vec& theta, const Vec& x) const = 0;

  Vec eval_H(const Vec& theta, const Vec& x) const {
    Vec h = eval_F(theta, x);
    const Vec g = eval_G(theta, x);
    axpy(h, 1.0, g);
    return h;
  }

  virtual bool has_exact_mean_grad() const { return false; }
  virtual Vec exact_mean_grad(const Vec&) const {
    throw std::logic_error("exact_mean_grad: not available for this oracle");
  }
};

// Oracle for the regularized quantile problem: F = 2*lambda_r*theta,
// G = -q + 1{x < theta}; h(theta) = 2*lambda_r*theta - q + CDF(theta).
class QuantileOracle final : public GradientOracle {
 public:
  explicit QuantileOracle(QuantileProblem prob) : prob_(prob) {
    if (!(prob_.lambda_r > 0.0))
      throw std::invalid_argument("QuantileOracle: lambda_r must be > 0");
  }

  std::size_t dim() const override { return 1; }
  std::size_t sample_dim() const override { return 1; }

  Vec draw_sample(RngStream& rng) const override { return {sample_dist(prob_.dist, rng)}; }

  Vec eval_F(const Vec& theta, const Vec&) const override {
    return {2.0 * prob_.lambda_r * theta[0]};
  }

  Vec eval_G(const Vec& theta, const Vec& x) const override {
    return {-prob_.q + (x[0] < theta[0] ? 1.0 : 0.0)};
  }

  bool has_exact_mean_grad() const override { return true; }
  Vec exact_mean_grad(const Vec& theta) const override {
    return {2.0 * prob_.lambda_r * theta[0] - prob_.q + prob_.dist.cdf(theta[0])};
  }

  const QuantileProblem& problem() const { return prob_; }

 private:
  QuantileProblem prob_;
};

// Sanity oracle with Gaussian invariant law: u(theta) = a*|theta|^2/2,
// F(theta, x) = a*theta, G(theta, x) = noise_sd * x with x standard normal.
class QuadraticOracle final : public GradientOracle {
 public:
  QuadraticOracle(double a, double noise_sd, std::size_t dim = 1)
      : a_(a), noise_sd_(noise_sd), dim_(dim) {
    if (!(a > 0.0)) throw std::invalid_argument("QuadraticOracle: a must be > 0");
    if (noise_sd < 0.0) throw std::invalid_argument("QuadraticOracle: noise_sd must be >= 0");
  }

  std::size_t dim() const override { return dim_; }
  std::size_t sample_dim() const override { return dim_; }

  Vec draw_sample(RngStream& rng) const override {
    Vec x(dim_);
    for (auto& xi : x) xi = rng.next_gaussian();
    return x;
  }

  Vec eval_F(const Vec& theta, const Vec&) const override { return scaled(theta, a_); }
  Vec eval_G(const Vec&, const Vec& x) const override { return scaled(x, noise_sd_); }

  bool has_exact_mean_grad() const override { return true; }
  Vec exact_mean_grad(const Vec& theta) const override { return scaled(theta, a_); }

  double curvature() const { return a_; }

 private:
  double a_;
  double noise_sd_;
  std::size_t dim_;
};

}  // namespace sgmcmc
