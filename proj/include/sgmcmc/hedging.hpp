#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sgmcmc/linalg.hpp"
#include "sgmcmc/rng.hpp"

namespace sgmcmc {

// Discrete-time multi-asset Black-Scholes-Merton market. Excess returns are
//   R_k = exp((r_tilde*1 + Sigma*lambda_tilde - diag(Sigma Sigma^T)/2)*Delta
//         + sqrt(Delta)*Sigma*eps_k) - R_f*1,  eps_k ~ N(0, I_m),
// with risk-free return R_f = exp(r_tilde*Delta).
struct MarketConfig {
  int p = 5;       // tradable assets
  int m = 5;       // noise dimension, m >= p
  double r_tilde = 0.03;
  Mat Sigma;       // p x m
  Vec lambda_tilde;  // m
  double Delta = 1.0 / 40.0;
  int K = 20;      // rebalancing dates
  double strike = 5.0;
  double gamma_pen = 0.5;  // loss asymmetry, in [0,1)
  double W0_wealth = 1.0;
  Vec S0;          // p initial prices

  double risk_free_return() const;
  // Drift vector (r_tilde*1 + Sigma*lambda_tilde - diag(Sigma Sigma^T)/2)*Delta.
  Vec log_drift() const;
  void validate() const;

  // Table scenarios: "table-col1" (p=m=5) ... "table-col4" (p=50, m=60).
  static MarketConfig scenario(const std::string& name);
};

// Asymmetric quadratic loss (1 - gamma*Sign(y))^2 * y^2 / 2 with
// Sign(y) = 1{y>0} - 1{y<0}.
double asym_loss(double y, double gamma_pen);
// Its derivative with the piecewise-constant Sign factor treated as constant:
// (1 - gamma*Sign(y))^2 * y.
double asym_loss_deriv(double y, double gamma_pen);

// One two-hidden-layer ReLU/tanh policy per rebalancing date. Flattening is
// k ascending, then (W1, W2, W3, b1, b2, b3) row-major.
struct PolicyParams {
  int K = 0;
  int nu = 0;  // hidden width
  int p = 0;
  std::vector<Mat> W1;  // nu x (1+p)
  std::vector<Mat> W2;  // nu x nu
  std::vector<Mat> W3;  // p x nu
  std::vector<Vec> b1, b2;  // nu
  std::vector<Vec> b3;      // p

  static PolicyParams xavier(int K, int nu, int p, RngStream& rng);
  std::size_t dim() const {
    return static_cast<std::size_t>(K) *
           (static_cast<std::size_t>(nu) * (1 + p + nu + p + 2) + static_cast<std::size_t>(p));
  }
  Vec flatten() const;
  void unflatten(const Vec& theta);
};

// tanh(W3 relu(W2 relu(W1 x + b1) + b2) + b3); x = (wealth, prices).
Vec policy_eval(const PolicyParams& pp, int k, const Vec& state);

// K excess-return vectors for one episode.
std::vector<Vec> sample_returns(const MarketConfig& cfg, RngStream& rng);

struct RolloutResult {
  double terminal_wealth = 0.0;
  double claim = 0.0;
  double loss = 0.0;
};

// Wealth/price recursion under the given policies and returns; the claim is
// max(sum_i S_K^i - strike, 0). Aborts if a price factor 1 + R_k is not
// strictly positive or the wealth turns non-finite.
RolloutResult rollout(const MarketConfig& cfg, const PolicyParams& policies,
                      const std::vector<Vec>& returns);

// Gradient of the episode loss with respect to the flattened policy
// parameters, computed by the reverse-mode tape. Also returns the loss.
double rollout_grad(const MarketConfig& cfg, const PolicyParams& policies,
                    const std::vector<Vec>& returns, Vec& grad_out);

enum class HedgeOptimizer { kSghmc, kSgld };

struct HedgeTrainConfig {
  HedgeOptimizer optimizer = HedgeOptimizer::kSghmc;
  double eta = 0.05;
  double gamma = 0.5;
  double beta = 1e12;
  int steps = 200;
  int batch = 128;
  int samples_per_step = 20000;
  int nu = 5;
  int test_samples = 10000;
  std::uint64_t seed = 0;
};

struct HedgeCurvePoint {
  int step = 0;
  double train_loss = 0.0;
  double test_score = 0.0;
};

struct HedgeTrainResult {
  PolicyParams policies;
  std::vector<HedgeCurvePoint> curve;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  double initial_test_score = 0.0;
  double final_test_score = 0.0;
};

// Per step, generates samples_per_step fresh episodes and runs
// ceil(samples_per_step/batch) optimizer iterations on the batched mean
// loss. The test score is the mean loss over a fixed held-out episode set.
HedgeTrainResult hedge_train(const MarketConfig& cfg, const HedgeTrainConfig& tc);

// Mean loss of the policies over n freshly drawn episodes.
double hedge_score(const MarketConfig& cfg, const PolicyParams& policies, int n_episodes,
                   RngStream& rng);

}  // namespace sgmcmc
