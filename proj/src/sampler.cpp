#include "sgmcmc/sampler.hpp"

#include <cmath>

namespace sgmcmc {

namespace {

void check_dims(std::size_t d, const Vec& grad, const Vec& noise) {
  if (grad.size() != d || noise.size() != d)
    throw std::invalid_argument("step: grad/noise dimension mismatch");
}

}  // namespace

KineticState sghmc_step(const KineticState& state, const Vec& grad, const SamplerConfig& cfg,
                        const Vec& noise, std::uint64_t iter) {
  const std::size_t d = state.dim();
  if (state.v.size() != d) throw std::invalid_argument("sghmc_step: theta/v dimension mismatch");
  check_dims(d, grad, noise);
  if (!all_finite(grad)) throw DivergenceError("sghmc_step: non-finite gradient", iter);
  if (!all_finite(noise)) throw DivergenceError("sghmc_step: non-finite noise", iter);

  const double noise_scale = std::sqrt(2.0 * cfg.gamma * cfg.eta / cfg.beta);
  KineticState next;
  next.theta.resize(d);
  next.v.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    // theta uses the pre-update momentum.
    next.theta[i] = state.theta[i] + cfg.eta * state.v[i];
    next.v[i] = state.v[i] - cfg.eta * (cfg.gamma * state.v[i] + grad[i]) + noise_scale * noise[i];
  }
  if (!next.finite()) throw DivergenceError("sghmc_step: non-finite state", iter);
  return next;
}

Vec sgld_step(const Vec& theta, const Vec& grad, const SamplerConfig& cfg, const Vec& noise,
              std::uint64_t iter) {
  const std::size_t d = theta.size();
  check_dims(d, grad, noise);
  if (!all_finite(grad)) throw DivergenceError("sgld_step: non-finite gradient", iter);
  if (!all_finite(noise)) throw DivergenceError("sgld_step: non-finite noise", iter);

  const double noise_scale = std::sqrt(2.0 * cfg.eta / cfg.beta);
  Vec next(d);
  for (std::size_t i = 0; i < d; ++i) {
    next[i] = theta[i] - cfg.eta * grad[i] + noise_scale * noise[i];
  }
  if (!all_finite(next)) throw DivergenceError("sgld_step: non-finite state", iter);
  return next;
}

Trajectory run_chain(const GradientOracle& oracle, const SamplerConfig& cfg,
                     const KineticState& init, Algo algo, std::uint64_t stride) {
  cfg.validate();
  if (stride == 0) throw std::invalid_argument("run_chain: stride must be positive");
  const std::size_t d = oracle.dim();
  if (init.dim() != d || init.v.size() != d)
    throw std::invalid_argument("run_chain: init dimension does not match oracle");

  RngStream data_rng = make_stream(cfg.seed, cfg.chain_id, Substream::kData);
  RngStream noise_rng = make_stream(cfg.seed, cfg.chain_id, Substream::kNoise);

  Trajectory traj;
  traj.states.reserve(
      static_cast<std::size_t>((cfg.n_iters - cfg.burn_in) / stride + 1));

  KineticState state = init;
  Vec grad(d), noise(d), h(d);

  auto record_due = [&](std::uint64_t iter) {
    return iter >= cfg.burn_in && (iter - cfg.burn_in) % stride == 0;
  };

  if (record_due(0)) traj.states.push_back(state);

  for (std::uint64_t n = 0; n < cfg.n_iters; ++n) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Vec x = oracle.draw_sample(data_rng);
      h = oracle.eval_H(state.theta, x);
      axpy(grad, 1.0 / cfg.batch_size, h);
    }
    for (auto& z : noise) z = noise_rng.next_gaussian();

    if (algo == Algo::kSghmc) {
      state = sghmc_step(state, grad, cfg, noise, n);
    } else {
      state.theta = sgld_step(state.theta, grad, cfg, noise, n);
    }
    if (record_due(n + 1)) traj.states.push_back(state);
  }

  traj.final_state = state;
  traj.step_count = cfg.n_iters;
  return traj;
}

Trajectory run_reference_chain(const GradientOracle& oracle, SamplerConfig cfg,
                               const KineticState& init, std::uint64_t stride,
                               double reference_eta) {
  cfg.eta = reference_eta;
  return run_chain(oracle, cfg, init, Algo::kSghmc, stride);
}

KineticState gaussian_init(std::size_t dim, std::uint64_t seed, std::uint64_t chain_id) {
  RngStream rng = make_stream(seed, chain_id, Substream::kInit);
  KineticState st;
  st.theta.resize(dim);
  st.v.resize(dim);
  for (auto& x : st.theta) x = rng.next_gaussian();
  for (auto& x : st.v) x = rng.next_gaussian();
  return st;
}

}  // namespace sgmcmc
