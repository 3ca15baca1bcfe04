#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "sgmcmc/numerics.hpp"
#include "sgmcmc/oracle.hpp"

namespace sgmcmc {

// u(theta) = E[l_q(X - theta)] + lambda_r*theta^2 with the pinball loss
// l_q(s) = (q - 1{s<0})s, evaluated by adaptive quadrature against the
// closed-form density, split at the kink, absolute tolerance 1e-10.
double u_quantile(double theta, const QuantileProblem& prob);

// Global minimum of u via golden-section around the true quantile
// (u is strictly convex there for lambda_r > 0).
MinimizeResult minimize_u_quantile(const QuantileProblem& prob);

struct RiskReport {
  double eta = 0.0;
  std::uint64_t n_iters = 0;
  double excess_risk_mean = 0.0;
  double excess_risk_se = 0.0;
  double excess_risk_min = 0.0;
  double excess_risk_max = 0.0;
  double excess_risk_sd = 0.0;
  std::vector<std::uint64_t> seeds;
};

// Mean excess risk u(theta) - inf u over trajectory endpoints. Callers may
// pass a precomputed inf u to avoid repeated golden-section searches; NaN
// recomputes it.
RiskReport excess_risk(const std::vector<double>& endpoints, const QuantileProblem& prob,
                       double inf_u_hint = std::numeric_limits<double>::quiet_NaN());

// Exact 1-D empirical Wasserstein distances between equal-size sorted
// samples: W1 = mean |a_(i) - b_(i)|, W2 = sqrt(mean (a_(i) - b_(i))^2).
double empirical_w1_1d(std::span<const double> a_sorted, std::span<const double> b_sorted);
double empirical_w2_1d(std::span<const double> a_sorted, std::span<const double> b_sorted);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// OLS fit of log(excess risk) against log(eta). All inputs must be positive;
// needs at least 3 points.
RateFit rate_slope(const std::vector<std::pair<double, double>>& eta_risk_points);

}  // namespace sgmcmc
