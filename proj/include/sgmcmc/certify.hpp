#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgmcmc/linalg.hpp"
#include "sgmcmc/oracle.hpp"

namespace sgmcmc {

// Inputs describing an oracle's regularity: local-Lipschitz data (L1, L2,
// rho) for F, average-Lipschitz constant L for H, dissipativity (a, b),
// sampler constants (gamma, beta), values at the origin, and data moments.
// moment_2rho2 = E[(1+|X|)^(2(rho+1))], moment_4rho4 = E[(1+|X|)^(4(rho+1))],
// moment_K1_mean/sq = E[K1bar(X)], E[K1bar(X)^2], moment_Fstar_sq = E[F*(X)^2].
struct AssumptionInputs {
  double L1 = 0.0;
  double L2 = 0.0;
  double rho = 0.0;
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  std::size_t dim = 1;
  double u0 = 0.0;       // u(0)
  double h0_norm = 0.0;  // |h(0)|
  double moment_2rho2 = 0.0;
  double moment_4rho4 = 0.0;
  double moment_K1_mean = 0.0;
  double moment_K1_sq = 0.0;
  double moment_Fstar_sq = 0.0;

  void validate() const;
};

struct DerivedConstants {
  double a_prime = 0.0;
  double b_prime = 0.0;       // the larger (safe) of the two published forms
  double b_prime_mean_sq = 0.0;  // b + (E[K1bar])^2 / (2a)
  double b_prime_sq_mean = 0.0;  // b + E[K1bar^2] / (2a)
  double lambda = 0.0;        // in (0, 1/4]
  double A_c = 0.0;
  double L1_tilde = 0.0;
  double C1_tilde = 0.0;
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
  double K1_tilde = 0.0;
  double c3_tilde = 0.0;
  double c3_hat = 0.0;
  double c4_tilde = 0.0;
  double c4_hat = 0.0;
  double c6_tilde = 0.0;  // informational, outside the eta_max chain
  double c7_tilde = 0.0;  // informational; proof coefficient 120 used
  double c8_tilde = 0.0;
  double K_tilde = 0.0;
  double eta_max = 0.0;
  std::vector<std::string> notes;
};

// Evaluates the explicit constants and the certified step-size bound
//   eta_max = min{1, 2/gamma, gamma*lambda/(2 K1), K3/K2, lambda*gamma/(2 Ktilde)}.
// Pure: identical inputs give bit-identical outputs. The eta-dependent
// bracket inside K1_tilde is evaluated at eta = 1, the most conservative
// admissible value.
DerivedConstants derive_constants(const AssumptionInputs& inp);

// Lyapunov function beta*u + (beta/4)*gamma^2*(|theta + v/gamma|^2
// + |v/gamma|^2 - lambda*|theta|^2); u_val = u(theta) supplied by the caller.
double lyapunov(const Vec& theta, const Vec& v, double u_val, double beta, double gamma,
                double lambda);

// Raised when a Monte-Carlo check cannot run on the given oracle.
class UnsupportedCheck : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

// Verifies E[H(theta, X)] = h(theta) at each theta by Monte Carlo; passes
// when every component error is within 4 standard errors. Requires
// exact_mean_grad.
std::vector<CheckReport> check_unbiasedness(const GradientOracle& oracle,
                                            const std::vector<Vec>& thetas,
                                            std::uint64_t n_samples, std::uint64_t seed = 1);

// Checks E|H(theta,X) - H(theta',X)| <= L|theta - theta'| + 3*SE over random
// pairs drawn uniformly from [-box_halfwidth, box_halfwidth]^d.
CheckReport check_avg_lipschitz(const GradientOracle& oracle, double L, std::uint64_t n_pairs,
                                std::uint64_t n_samples, double box_halfwidth = 5.0,
                                std::uint64_t seed = 2);

// Pointwise dissipativity <theta, F(theta,x)> >= a|theta|^2 - b over sampled
// (theta, x).
CheckReport check_dissipativity(const GradientOracle& oracle, double a, double b,
                                std::uint64_t n_points, double box_halfwidth = 5.0,
                                std::uint64_t seed = 3);

// Assembles AssumptionInputs for the quantile oracle. Constants with closed
// forms (L1, L2, L, a, b, K1bar = 2, F* = 6) are exact; the (1+|X|) moments
// are estimated with n_mc_samples draws, u(0) by quadrature.
AssumptionInputs quantile_assumption_inputs(const QuantileProblem& prob, double gamma,
                                            double beta,
                                            std::uint64_t n_mc_samples = 1000000,
                                            std::uint64_t seed = 4);

}  // namespace sgmcmc
