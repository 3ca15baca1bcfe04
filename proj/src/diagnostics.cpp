#include "sgmcmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgmcmc {

namespace {

constexpr double kQuadTol = 1e-10;

double pinball(double s, double q) { return (q - (s < 0.0 ? 1.0 : 0.0)) * s; }

// Integration window wide enough that the truncated tail mass, weighted by
// the linearly growing loss, stays below the quadrature tolerance. Twelve
// sigma-equivalents suffice for the Gaussian; the exponential tails of the
// Logistic and Gumbel need ~35 scale units.
std::pair<double, double> integration_window(const TargetDistribution& dist, double theta) {
  const double sig = dist.sigma_equivalent();
  double lo = dist.loc - std::max(12.0 * sig, 35.0 * dist.scale);
  double hi = dist.loc + std::max(12.0 * sig, 35.0 * dist.scale);
  lo = std::min(lo, theta - 1.0);
  hi = std::max(hi, theta + 1.0);
  return {lo, hi};
}

}  // namespace

double u_quantile(double theta, const QuantileProblem& prob) {
  const auto [lo, hi] = integration_window(prob.dist, theta);
  auto integrand = [&](double x) { return pinball(x - theta, prob.q) * prob.dist.pdf(x); };
  double val = 0.0;
  // Split at the kink x = theta.
  val += integrate_gk(integrand, lo, theta, kQuadTol / 2.0).value;
  val += integrate_gk(integrand, theta, hi, kQuadTol / 2.0).value;
  return val + prob.lambda_r * theta * theta;
}

MinimizeResult minimize_u_quantile(const QuantileProblem& prob) {
  const double q_star = true_quantile(prob.dist, prob.q);
  return golden_section_min([&](double t) { return u_quantile(t, prob); }, q_star - 1.0,
                            q_star + 1.0, 1e-10);
}

RiskReport excess_risk(const std::vector<double>& endpoints, const QuantileProblem& prob,
                       double inf_u_hint) {
  if (endpoints.empty()) throw std::invalid_argument("excess_risk: no endpoints");
  const double inf_u = std::isnan(inf_u_hint) ? minimize_u_quantile(prob).value : inf_u_hint;

  std::vector<double> risks;
  risks.reserve(endpoints.size());
  for (double t : endpoints) risks.push_back(u_quantile(t, prob) - inf_u);

  RiskReport rep;
  rep.excess_risk_mean = mean_of(risks);
  rep.excess_risk_sd = std::sqrt(variance_of(risks));
  rep.excess_risk_se = rep.excess_risk_sd / std::sqrt(static_cast<double>(risks.size()));
  rep.excess_risk_min = *std::min_element(risks.begin(), risks.end());
  rep.excess_risk_max = *std::max_element(risks.begin(), risks.end());
  return rep;
}

namespace {

void check_wasserstein_input(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("empirical_w: size mismatch");
  if (a.empty()) throw std::invalid_argument("empirical_w: empty samples");
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] < a[i - 1] || b[i] < b[i - 1])
      throw std::invalid_argument("empirical_w: samples must be sorted ascending");
  }
}

}  // namespace

double empirical_w1_1d(std::span<const double> a_sorted, std::span<const double> b_sorted) {
  check_wasserstein_input(a_sorted, b_sorted);
  double s = 0.0;
  for (std::size_t i = 0; i < a_sorted.size(); ++i) s += std::fabs(a_sorted[i] - b_sorted[i]);
  return s / static_cast<double>(a_sorted.size());
}

double empirical_w2_1d(std::span<const double> a_sorted, std::span<const double> b_sorted) {
  check_wasserstein_input(a_sorted, b_sorted);
  double s = 0.0;
  for (std::size_t i = 0; i < a_sorted.size(); ++i) {
    const double d = a_sorted[i] - b_sorted[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a_sorted.size()));
}

RateFit rate_slope(const std::vector<std::pair<double, double>>& eta_risk_points) {
  if (eta_risk_points.size() < 3) throw std::invalid_argument("rate_slope: need >= 3 points");
  std::vector<double> lx, ly;
  for (const auto& [eta, risk] : eta_risk_points) {
    if (!(eta > 0.0) || !(risk > 0.0))
      throw std::invalid_argument("rate_slope: eta and risk must be positive");
    lx.push_back(std::log(eta));
    ly.push_back(std::log(risk));
  }
  const OlsFit fit = ols_fit(lx, ly);
  return {fit.slope, fit.intercept, fit.r_squared};
}

}  // namespace sgmcmc
