#include "sgmcmc/hedging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "sgmcmc/autodiff.hpp"
#include "sgmcmc/neuralnet.hpp"
#include "sgmcmc/sampler.hpp"

namespace sgmcmc {

double MarketConfig::risk_free_return() const { return std::exp(r_tilde * Delta); }

Vec MarketConfig::log_drift() const {
  Vec drift = Sigma.matvec(lambda_tilde);
  for (int i = 0; i < p; ++i) {
    double row_sq = 0.0;
    for (int j = 0; j < m; ++j) row_sq += Sigma(i, j) * Sigma(i, j);
    drift[i] = (r_tilde + drift[i] - 0.5 * row_sq) * Delta;
  }
  return drift;
}

void MarketConfig::validate() const {
  if (p < 1 || m < p) throw std::invalid_argument("MarketConfig: need p >= 1 and m >= p");
  if (!(Delta > 0.0)) throw std::invalid_argument("MarketConfig: Delta must be > 0");
  if (K < 1) throw std::invalid_argument("MarketConfig: K must be >= 1");
  if (!(gamma_pen >= 0.0 && gamma_pen < 1.0))
    throw std::invalid_argument("MarketConfig: gamma_pen must be in [0,1)");
  if (r_tilde < 0.0) throw std::invalid_argument("MarketConfig: r_tilde must be >= 0");
  if (Sigma.rows != static_cast<std::size_t>(p) || Sigma.cols != static_cast<std::size_t>(m))
    throw std::invalid_argument("MarketConfig: Sigma must be p x m");
  if (lambda_tilde.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("MarketConfig: lambda_tilde must have length m");
  if (S0.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("MarketConfig: S0 must have length p");
}

namespace {

MarketConfig base_scenario(int p, int m, double strike, double lt_low, double lt_high,
                           int split, double off_diag) {
  MarketConfig cfg;
  cfg.p = p;
  cfg.m = m;
  cfg.strike = strike;
  cfg.Sigma = Mat(p, m, off_diag);
  for (int i = 0; i < p; ++i) cfg.Sigma(i, i) = 0.15;
  cfg.lambda_tilde.assign(m, lt_high);
  for (int i = 0; i < split; ++i) cfg.lambda_tilde[i] = lt_low;
  cfg.S0.assign(p, 1.0);
  return cfg;
}

}  // namespace

MarketConfig MarketConfig::scenario(const std::string& name) {
  if (name == "table-col1") return base_scenario(5, 5, 5.0, 0.1, 0.2, 2, 0.01);
  if (name == "table-col2") return base_scenario(50, 50, 50.0, 0.01, 0.05, 25, 0.001);
  if (name == "table-col3") return base_scenario(5, 10, 5.0, 0.01, 0.05, 2, 0.01);
  if (name == "table-col4") return base_scenario(50, 60, 60.0, 0.01, 0.05, 25, 0.001);
  throw std::invalid_argument("MarketConfig: unknown scenario '" + name + "'");
}

double asym_loss(double y, double gamma_pen) {
  const double sgn = y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0);
  const double w = 1.0 - gamma_pen * sgn;
  return 0.5 * w * w * y * y;
}

double asym_loss_deriv(double y, double gamma_pen) {
  const double sgn = y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0);
  const double w = 1.0 - gamma_pen * sgn;
  return w * w * y;
}

PolicyParams PolicyParams::xavier(int K, int nu, int p, RngStream& rng) {
  PolicyParams pp;
  pp.K = K;
  pp.nu = nu;
  pp.p = p;
  for (int k = 0; k < K; ++k) {
    pp.W1.push_back(xavier_matrix(nu, 1 + p, rng));
    pp.W2.push_back(xavier_matrix(nu, nu, rng));
    pp.W3.push_back(xavier_matrix(p, nu, rng));
    pp.b1.push_back(xavier_vector(nu, 1 + p, nu, rng));
    pp.b2.push_back(xavier_vector(nu, nu, nu, rng));
    pp.b3.push_back(xavier_vector(p, nu, p, rng));
  }
  return pp;
}

Vec PolicyParams::flatten() const {
  Vec theta;
  theta.reserve(dim());
  for (int k = 0; k < K; ++k) {
    theta.insert(theta.end(), W1[k].a.begin(), W1[k].a.end());
    theta.insert(theta.end(), W2[k].a.begin(), W2[k].a.end());
    theta.insert(theta.end(), W3[k].a.begin(), W3[k].a.end());
    theta.insert(theta.end(), b1[k].begin(), b1[k].end());
    theta.insert(theta.end(), b2[k].begin(), b2[k].end());
    theta.insert(theta.end(), b3[k].begin(), b3[k].end());
  }
  return theta;
}

void PolicyParams::unflatten(const Vec& theta) {
  if (theta.size() != dim()) throw std::invalid_argument("PolicyParams: wrong flat length");
  std::size_t off = 0;
  auto take = [&](double* dst, std::size_t n) {
    std::copy(theta.begin() + off, theta.begin() + off + n, dst);
    off += n;
  };
  for (int k = 0; k < K; ++k) {
    take(W1[k].a.data(), W1[k].a.size());
    take(W2[k].a.data(), W2[k].a.size());
    take(W3[k].a.data(), W3[k].a.size());
    take(b1[k].data(), b1[k].size());
    take(b2[k].data(), b2[k].size());
    take(b3[k].data(), b3[k].size());
  }
}

Vec policy_eval(const PolicyParams& pp, int k, const Vec& state) {
  if (state.size() != static_cast<std::size_t>(1 + pp.p))
    throw std::invalid_argument("policy_eval: state must have length 1+p");
  Vec y = pp.W1[k].matvec(state);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] += pp.b1[k][i];
    y[i] = y[i] > 0.0 ? y[i] : 0.0;
  }
  Vec z = pp.W2[k].matvec(y);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] += pp.b2[k][i];
    z[i] = z[i] > 0.0 ? z[i] : 0.0;
  }
  Vec a = pp.W3[k].matvec(z);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::tanh(a[i] + pp.b3[k][i]);
  return a;
}

std::vector<Vec> sample_returns(const MarketConfig& cfg, RngStream& rng) {
  const Vec drift = cfg.log_drift();
  const double rf = cfg.risk_free_return();
  const double sqrt_dt = std::sqrt(cfg.Delta);
  std::vector<Vec> returns(cfg.K);
  Vec eps(cfg.m);
  for (int k = 0; k < cfg.K; ++k) {
    for (auto& e : eps) e = rng.next_gaussian();
    Vec shock = cfg.Sigma.matvec(eps);
    Vec r(cfg.p);
    for (int i = 0; i < cfg.p; ++i) r[i] = std::exp(drift[i] + sqrt_dt * shock[i]) - rf;
    returns[k] = std::move(r);
  }
  return returns;
}

RolloutResult rollout(const MarketConfig& cfg, const PolicyParams& policies,
                      const std::vector<Vec>& returns) {
  if (returns.size() != static_cast<std::size_t>(cfg.K))
    throw std::invalid_argument("rollout: expected K return vectors");
  const double rf = cfg.risk_free_return();
  double wealth = cfg.W0_wealth;
  Vec prices = cfg.S0;
  Vec state(1 + cfg.p);

  for (int k = 0; k < cfg.K; ++k) {
    state[0] = wealth;
    for (int i = 0; i < cfg.p; ++i) state[1 + i] = prices[i];
    const Vec action = policy_eval(policies, k, state);
    wealth *= dot(action, returns[k]) + rf;
    if (!std::isfinite(wealth)) throw DivergenceError("rollout: non-finite wealth", k);
    for (int i = 0; i < cfg.p; ++i) {
      const double factor = 1.0 + returns[k][i];
      if (!(factor > 0.0)) throw DivergenceError("rollout: nonpositive price factor", k);
      prices[i] *= factor;
    }
  }

  RolloutResult res;
  res.terminal_wealth = wealth;
  double total = 0.0;
  for (double s : prices) total += s;
  res.claim = std::max(total - cfg.strike, 0.0);
  res.loss = asym_loss(wealth - res.claim, cfg.gamma_pen);
  return res;
}

double rollout_grad(const MarketConfig& cfg, const PolicyParams& policies,
                    const std::vector<Vec>& returns, Vec& grad_out) {
  if (returns.size() != static_cast<std::size_t>(cfg.K))
    throw std::invalid_argument("rollout_grad: expected K return vectors");
  const double rf = cfg.risk_free_return();

  ad::Tape t;
  std::vector<std::array<ad::NodeId, 6>> leaves(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    leaves[k] = {t.input(policies.W1[k].a), t.input(policies.W2[k].a),
                 t.input(policies.W3[k].a), t.input(policies.b1[k]),
                 t.input(policies.b2[k]),   t.input(policies.b3[k])};
  }

  const std::size_t nu = static_cast<std::size_t>(policies.nu);
  const std::size_t p = static_cast<std::size_t>(cfg.p);

  // Prices evolve exogenously; only the wealth flows through the tape.
  Vec prices = cfg.S0;
  ad::NodeId wealth = t.input({cfg.W0_wealth});
  const ad::NodeId rf_node = t.constant({rf});

  for (int k = 0; k < cfg.K; ++k) {
    const ad::NodeId x = t.concat(wealth, t.constant(prices));
    const auto& lv = leaves[k];
    const ad::NodeId h1 = t.relu(t.add(t.matvec(lv[0], x, nu, 1 + p), lv[3]));
    const ad::NodeId h2 = t.relu(t.add(t.matvec(lv[1], h1, nu, nu), lv[4]));
    const ad::NodeId action = t.tanh_op(t.add(t.matvec(lv[2], h2, p, nu), lv[5]));
    const ad::NodeId growth = t.add(t.dot(action, t.constant(returns[k])), rf_node);
    wealth = t.mul(wealth, growth);
    if (!std::isfinite(t.value(wealth)[0]))
      throw DivergenceError("rollout_grad: non-finite wealth", k);
    for (int i = 0; i < cfg.p; ++i) {
      const double factor = 1.0 + returns[k][i];
      if (!(factor > 0.0)) throw DivergenceError("rollout_grad: nonpositive price factor", k);
      prices[i] *= factor;
    }
  }

  double total = 0.0;
  for (double s : prices) total += s;
  const double claim = std::max(total - cfg.strike, 0.0);

  const ad::NodeId y = t.sub(wealth, t.constant({claim}));
  const double y_val = t.value(y)[0];
  const double sgn = y_val > 0.0 ? 1.0 : (y_val < 0.0 ? -1.0 : 0.0);
  const double w = 1.0 - cfg.gamma_pen * sgn;
  // Sign factor folded into the scale, so its derivative contribution is 0.
  const ad::NodeId loss = t.scale(t.square(y), 0.5 * w * w);
  t.backward(loss);

  grad_out.clear();
  grad_out.reserve(policies.dim());
  for (int k = 0; k < cfg.K; ++k) {
    for (const ad::NodeId id : leaves[k]) {
      const Vec& g = t.grad(id);
      grad_out.insert(grad_out.end(), g.begin(), g.end());
    }
  }
  return t.value(loss)[0];
}

double hedge_score(const MarketConfig& cfg, const PolicyParams& policies, int n_episodes,
                   RngStream& rng) {
  double s = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    s += rollout(cfg, policies, sample_returns(cfg, rng)).loss;
  }
  return s / static_cast<double>(n_episodes);
}

HedgeTrainResult hedge_train(const MarketConfig& cfg, const HedgeTrainConfig& tc) {
  cfg.validate();
  if (tc.steps < 0 || tc.batch < 1 || tc.samples_per_step < 1)
    throw std::invalid_argument("hedge_train: bad training config");

  RngStream init_rng = make_stream(tc.seed, 0, Substream::kInit);
  HedgeTrainResult res;
  res.policies = PolicyParams::xavier(cfg.K, tc.nu, cfg.p, init_rng);

  SamplerConfig scfg;
  scfg.eta = tc.eta;
  scfg.gamma = tc.gamma;
  scfg.beta = tc.beta;
  scfg.seed = tc.seed;

  RngStream episode_rng = make_stream(tc.seed, 0, Substream::kData);
  RngStream noise_rng = make_stream(tc.seed, 0, Substream::kNoise);

  KineticState state;
  state.theta = res.policies.flatten();
  state.v.assign(state.theta.size(), 0.0);

  auto test_score = [&](const PolicyParams& pp) {
    RngStream test_rng = make_stream(tc.seed, 1, Substream::kAux);
    return hedge_score(cfg, pp, tc.test_samples, test_rng);
  };

  res.initial_test_score = test_score(res.policies);
  {
    // Baseline train loss of the untouched initial policies.
    RngStream probe = make_stream(tc.seed, 2, Substream::kAux);
    res.initial_train_loss = hedge_score(cfg, res.policies, std::max(tc.batch, 1024), probe);
  }

  const int iters_per_step = (tc.samples_per_step + tc.batch - 1) / tc.batch;
  Vec noise(state.theta.size());
  Vec grad(state.theta.size());
  Vec episode_grad;
  std::uint64_t iter = 0;

  for (int step = 0; step < tc.steps; ++step) {
    double step_loss = 0.0;
    for (int it = 0; it < iters_per_step; ++it) {
      res.policies.unflatten(state.theta);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (int b = 0; b < tc.batch; ++b) {
        const auto returns = sample_returns(cfg, episode_rng);
        batch_loss += rollout_grad(cfg, res.policies, returns, episode_grad);
        axpy(grad, 1.0 / tc.batch, episode_grad);
      }
      batch_loss /= static_cast<double>(tc.batch);
      if (!std::isfinite(batch_loss))
        throw DivergenceError("hedge_train: non-finite batch loss", iter);
      step_loss += batch_loss;

      for (auto& x : noise) x = noise_rng.next_gaussian();
      if (tc.optimizer == HedgeOptimizer::kSghmc) {
        state = sghmc_step(state, grad, scfg, noise, iter);
      } else {
        state.theta = sgld_step(state.theta, grad, scfg, noise, iter);
      }
      ++iter;
    }
    res.policies.unflatten(state.theta);
    HedgeCurvePoint pt;
    pt.step = step + 1;
    pt.train_loss = step_loss / static_cast<double>(iters_per_step);
    pt.test_score = test_score(res.policies);
    res.curve.push_back(pt);
  }

  res.policies.unflatten(state.theta);
  res.final_test_score = res.curve.empty() ? res.initial_test_score : res.curve.back().test_score;
  res.final_train_loss = res.curve.empty() ? res.initial_train_loss : res.curve.back().train_loss;
  return res;
}

}  // namespace sgmcmc
