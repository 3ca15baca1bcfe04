#include "sgmcmc/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgmcmc/diagnostics.hpp"
#include "sgmcmc/rng.hpp"

namespace sgmcmc {

namespace {

void require_finite_nonneg(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0)
    throw std::invalid_argument(std::string("AssumptionInputs: ") + name +
                                " must be finite and >= 0");
}

void require_finite_pos(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0)
    throw std::invalid_argument(std::string("AssumptionInputs: ") + name +
                                " must be finite and > 0");
}

}  // namespace

void AssumptionInputs::validate() const {
  require_finite_nonneg(L1, "L1");
  require_finite_nonneg(L2, "L2");
  require_finite_nonneg(rho, "rho");
  require_finite_pos(L, "L");
  require_finite_pos(a, "a");
  require_finite_nonneg(b, "b");
  require_finite_pos(gamma, "gamma");
  require_finite_pos(beta, "beta");
  if (dim < 1) throw std::invalid_argument("AssumptionInputs: dim must be >= 1");
  if (!std::isfinite(u0)) throw std::invalid_argument("AssumptionInputs: u0 must be finite");
  require_finite_nonneg(h0_norm, "h0_norm");
  require_finite_nonneg(moment_2rho2, "moment_2rho2");
  require_finite_nonneg(moment_4rho4, "moment_4rho4");
  require_finite_nonneg(moment_K1_mean, "moment_K1_mean");
  require_finite_nonneg(moment_K1_sq, "moment_K1_sq");
  require_finite_nonneg(moment_Fstar_sq, "moment_Fstar_sq");
}

DerivedConstants derive_constants(const AssumptionInputs& inp) {
  inp.validate();
  DerivedConstants out;
  const double g = inp.gamma;
  const double L = inp.L;

  out.a_prime = inp.a / 2.0;
  out.b_prime_mean_sq = inp.b + (inp.moment_K1_mean * inp.moment_K1_mean) / (2.0 * inp.a);
  out.b_prime_sq_mean = inp.b + inp.moment_K1_sq / (2.0 * inp.a);
  out.b_prime = std::max(out.b_prime_mean_sq, out.b_prime_sq_mean);
  if (out.b_prime_mean_sq != out.b_prime_sq_mean) {
    out.notes.push_back(
        "b_prime: the statement form b + E[K1bar^2]/(2a) and the derivation form "
        "b + (E[K1bar])^2/(2a) differ; the larger value is used downstream");
  }

  out.lambda = std::min(0.25, out.a_prime / (L + 2.0 * L * inp.h0_norm + g * g / 2.0));
  out.A_c = (inp.beta / 2.0) *
            (2.0 * out.lambda * inp.u0 + 2.0 * out.lambda * L * inp.h0_norm + out.b_prime);

  const double one_minus_2l = 1.0 - 2.0 * out.lambda;

  out.L1_tilde = 2.0 * inp.L1 * inp.L1 * inp.moment_2rho2;
  out.C1_tilde = 4.0 * inp.L2 * inp.L2 * inp.moment_2rho2 + 4.0 * inp.moment_Fstar_sq;

  out.K1 = 0.5 * std::max((out.L1_tilde + g * L * L) / (g * g / 16.0 * one_minus_2l),
                          (L + g * g / 2.0 - g * g * out.lambda / 2.0 + g / 2.0) /
                              (one_minus_2l / 8.0));
  out.K2 = (g * inp.h0_norm * inp.h0_norm + out.C1_tilde) / 2.0;
  out.K3 = g * (static_cast<double>(inp.dim) + out.A_c) / inp.beta;

  // eta-dependent bracket evaluated at eta = 1 (eta <= 1 always holds).
  out.K1_tilde =
      std::max(((1.0 + g / 2.0) * inp.L1 * inp.L1 * inp.moment_2rho2) /
                   (g * g / 16.0 * one_minus_2l),
               (L / 2.0 + g * g / 4.0 - g * g * out.lambda / 4.0 + g / 4.0) /
                   (one_minus_2l / 8.0));

  const double L4 = L * L * L * L;
  const double L1_4 = inp.L1 * inp.L1 * inp.L1 * inp.L1;
  out.c3_tilde = 1.5 * g * g + 24.0 * (2.0 + g) * (2.0 + g) * (L4 + L1_4 * inp.moment_4rho4);
  out.c3_hat = 8.0 * (1.0 + g / 2.0) * (1.0 + g / 2.0) * L1_4 * inp.moment_4rho4;
  out.c4_tilde = 2.0 * (1.0 + out.lambda * g - g) * (1.0 + out.lambda * g - g);
  const double c4h_base = L + g * g / 2.0 - out.lambda * g * g / 2.0 + g;
  out.c4_hat = 2.0 * c4h_base * c4h_base;

  const double d_real = static_cast<double>(inp.dim);
  out.c6_tilde =
      8.0 * std::max(5.0 * g * d_real / (one_minus_2l / 8.0),
                     3.0 * g * d_real * (g * g + 5.0 * inp.L1 * inp.L1 * inp.moment_2rho2) /
                         (one_minus_2l * g * g / 16.0));
  out.c7_tilde =
      120.0 * g * d_real * (inp.L2 * inp.L2 * inp.moment_2rho2 + inp.moment_Fstar_sq);
  out.notes.push_back(
      "c7_tilde uses the derivation coefficient 120; the companion constants table "
      "lists 90 for the same term (c7_tilde is informational, outside the eta_max chain)");

  out.c8_tilde = std::max((out.c3_tilde + out.c3_hat) /
                              (one_minus_2l * one_minus_2l * g * g * g * g / 128.0),
                          (out.c4_tilde + out.c4_hat) / (one_minus_2l * one_minus_2l / 32.0));
  out.K_tilde = 2.0 * out.K1_tilde + out.c8_tilde;

  const double inf = std::numeric_limits<double>::infinity();
  const double term_k3k2 = out.K2 > 0.0 ? out.K3 / out.K2 : inf;
  out.eta_max = std::min({1.0, 2.0 / g, g * out.lambda / (2.0 * out.K1), term_k3k2,
                          out.lambda * g / (2.0 * out.K_tilde)});
  return out;
}

double lyapunov(const Vec& theta, const Vec& v, double u_val, double beta, double gamma,
                double lambda) {
  if (theta.size() != v.size()) throw std::invalid_argument("lyapunov: dimension mismatch");
  if (!(lambda > 0.0 && lambda <= 0.25))
    throw std::invalid_argument("lyapunov: lambda must be in (0, 1/4]");
  double cross = 0.0, vv = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double tv = theta[i] + v[i] / gamma;
    cross += tv * tv;
    const double gv = v[i] / gamma;
    vv += gv * gv;
    tt += theta[i] * theta[i];
  }
  return beta * u_val + (beta / 4.0) * gamma * gamma * (cross + vv - lambda * tt);
}

std::vector<CheckReport> check_unbiasedness(const GradientOracle& oracle,
                                            const std::vector<Vec>& thetas,
                                            std::uint64_t n_samples, std::uint64_t seed) {
  if (!oracle.has_exact_mean_grad())
    throw UnsupportedCheck("check_unbiasedness: oracle has no exact_mean_grad");
  if (n_samples < 2) throw std::invalid_argument("check_unbiasedness: n_samples too small");

  std::vector<CheckReport> reports;
  RngStream rng(seed, 0, static_cast<std::uint64_t>(Substream::kAux));
  const std::size_t d = oracle.dim();
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const Vec& theta = thetas[t];
    Vec sum(d, 0.0), sum_sq(d, 0.0);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
      const Vec x = oracle.draw_sample(rng);
      const Vec h = oracle.eval_H(theta, x);
      for (std::size_t k = 0; k < d; ++k) {
        sum[k] += h[k];
        sum_sq[k] += h[k] * h[k];
      }
    }
    const Vec exact = oracle.exact_mean_grad(theta);
    const double n = static_cast<double>(n_samples);
    double worst_ratio = 0.0;
    double worst_err = 0.0, worst_se = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double mean = sum[k] / n;
      const double var = std::max(0.0, sum_sq[k] / n - mean * mean);
      const double se = std::sqrt(var / n);
      const double err = std::fabs(mean - exact[k]);
      const double ratio = err <= 1e-12 ? 0.0 : err / std::max(se, 1e-300);
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst_err = err;
        worst_se = se;
      }
    }
    CheckReport rep;
    rep.name = "unbiasedness[theta " + std::to_string(t) + "]";
    rep.statistic = worst_ratio;
    rep.threshold = 4.0;
    rep.pass = worst_ratio <= 4.0;
    rep.detail = "worst |mc_mean - h| = " + std::to_string(worst_err) +
                 ", se = " + std::to_string(worst_se);
    reports.push_back(std::move(rep));
  }
  return reports;
}

CheckReport check_avg_lipschitz(const GradientOracle& oracle, double L, std::uint64_t n_pairs,
                                std::uint64_t n_samples, double box_halfwidth,
                                std::uint64_t seed) {
  if (!(L > 0.0)) throw std::invalid_argument("check_avg_lipschitz: L must be > 0");
  RngStream pair_rng(seed, 1, static_cast<std::uint64_t>(Substream::kAux));
  RngStream data_rng(seed, 2, static_cast<std::uint64_t>(Substream::kData));
  const std::size_t d = oracle.dim();

  double worst_ratio = 0.0;
  for (std::uint64_t p = 0; p < n_pairs; ++p) {
    Vec theta(d), theta_p(d);
    for (std::size_t k = 0; k < d; ++k) {
      theta[k] = (2.0 * pair_rng.next_uniform() - 1.0) * box_halfwidth;
      theta_p[k] = (2.0 * pair_rng.next_uniform() - 1.0) * box_halfwidth;
    }
    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
      const Vec x = oracle.draw_sample(data_rng);
      const double diff = norm(subbed(oracle.eval_H(theta, x), oracle.eval_H(theta_p, x)));
      sum += diff;
      sum_sq += diff * diff;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    const double se = std::sqrt(var / n);
    const double bound = L * norm(subbed(theta, theta_p)) + 3.0 * se;
    const double ratio = mean <= 1e-14 ? 0.0 : mean / std::max(bound, 1e-300);
    worst_ratio = std::max(worst_ratio, ratio);
  }
  CheckReport rep;
  rep.name = "avg_lipschitz";
  rep.statistic = worst_ratio;
  rep.threshold = 1.0;
  rep.pass = worst_ratio <= 1.0 + 1e-12;
  rep.detail = "worst E|H(theta,X)-H(theta',X)| / (L|theta-theta'| + 3 SE) over " +
               std::to_string(n_pairs) + " pairs";
  return rep;
}

CheckReport check_dissipativity(const GradientOracle& oracle, double a, double b,
                                std::uint64_t n_points, double box_halfwidth,
                                std::uint64_t seed) {
  if (!(a > 0.0)) throw std::invalid_argument("check_dissipativity: a must be > 0");
  if (b < 0.0) throw std::invalid_argument("check_dissipativity: b must be >= 0");
  RngStream point_rng(seed, 3, static_cast<std::uint64_t>(Substream::kAux));
  RngStream data_rng(seed, 4, static_cast<std::uint64_t>(Substream::kData));
  const std::size_t d = oracle.dim();

  double min_margin = std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < n_points; ++i) {
    Vec theta(d);
    for (std::size_t k = 0; k < d; ++k)
      theta[k] = (2.0 * point_rng.next_uniform() - 1.0) * box_halfwidth;
    const Vec x = oracle.draw_sample(data_rng);
    const double lhs = dot(theta, oracle.eval_F(theta, x));
    const double margin = lhs - (a * norm_sq(theta) - b);
    min_margin = std::min(min_margin, margin);
  }
  CheckReport rep;
  rep.name = "dissipativity";
  rep.statistic = min_margin;
  rep.threshold = -1e-9;
  rep.pass = min_margin >= rep.threshold;
  rep.detail = "min <theta,F(theta,x)> - (a|theta|^2 - b) over " + std::to_string(n_points) +
               " points";
  return rep;
}

AssumptionInputs quantile_assumption_inputs(const QuantileProblem& prob, double gamma,
                                            double beta, std::uint64_t n_mc_samples,
                                            std::uint64_t seed) {
  AssumptionInputs inp;
  inp.gamma = gamma;
  inp.beta = beta;
  inp.L1 = 2.0 * prob.lambda_r;
  inp.L2 = 0.0;
  inp.rho = 0.0;
  inp.L = 2.0 * (prob.lambda_r + prob.dist.density_sup());
  inp.a = 2.0 * prob.lambda_r;
  inp.b = 0.0;
  inp.dim = 1;
  inp.u0 = u_quantile(0.0, prob);
  inp.h0_norm = std::fabs(prob.dist.cdf(0.0) - prob.q);
  // |G| <= 2 identically, F(0,0) = 0, so F* = 2*2 + 2 + 0 = 6.
  inp.moment_K1_mean = 2.0;
  inp.moment_K1_sq = 4.0;
  inp.moment_Fstar_sq = 36.0;

  RngStream rng(seed, 5, static_cast<std::uint64_t>(Substream::kData));
  double s2 = 0.0, s4 = 0.0;
  for (std::uint64_t i = 0; i < n_mc_samples; ++i) {
    const double ax = 1.0 + std::fabs(sample_dist(prob.dist, rng));
    const double ax2 = ax * ax;
    s2 += ax2;
    s4 += ax2 * ax2;
  }
  inp.moment_2rho2 = s2 / static_cast<double>(n_mc_samples);
  inp.moment_4rho4 = s4 / static_cast<double>(n_mc_samples);
  return inp;
}

}  // namespace sgmcmc
