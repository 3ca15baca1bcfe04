#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgmcmc/linalg.hpp"
#include "sgmcmc/oracle.hpp"
#include "sgmcmc/rng.hpp"

namespace sgmcmc {

// Position/momentum pair of the kinetic chain.
struct KineticState {
  Vec theta;
  Vec v;

  std::size_t dim() const { return theta.size(); }
  bool finite() const { return all_finite(theta) && all_finite(v); }
};

enum class Algo { kSghmc, kSgld };

inline const char* algo_name(Algo a) { return a == Algo::kSghmc ? "sghmc" : "sgld"; }

struct SamplerConfig {
  double eta = 1e-3;    // step size
  double gamma = 0.5;   // friction
  double beta = 1e10;   // inverse temperature
  std::uint64_t n_iters = 0;
  std::uint64_t seed = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t chain_id = 0;
  int batch_size = 1;  // samples averaged per gradient evaluation

  void validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("SamplerConfig: eta must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("SamplerConfig: gamma must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("SamplerConfig: beta must be > 0");
    if (burn_in > n_iters) throw std::invalid_argument("SamplerConfig: burn_in > n_iters");
    if (batch_size < 1) throw std::invalid_argument("SamplerConfig: batch_size must be >= 1");
  }
};

// Raised when a step encounters a non-finite gradient, noise draw, or state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::uint64_t iteration)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::uint64_t iteration() const { return iteration_; }

 private:
  std::uint64_t iteration_;
};

struct Trajectory {
  std::vector<KineticState> states;  // thinned, recorded from iteration burn_in on
  KineticState final_state;
  std::uint64_t step_count = 0;
};

// One kinetic step:
//   v' = v - eta*(gamma*v + grad) + sqrt(2*gamma*eta/beta)*noise
//   theta' = theta + eta*v            (pre-update momentum)
// grad must already be evaluated at the current position. `iter` is carried
// into the diagnostic error on non-finite inputs or outputs.
KineticState sghmc_step(const KineticState& state, const Vec& grad, const SamplerConfig& cfg,
                        const Vec& noise, std::uint64_t iter = 0);

// Overdamped counterpart: theta' = theta - eta*grad + sqrt(2*eta/beta)*noise.
Vec sgld_step(const Vec& theta, const Vec& grad, const SamplerConfig& cfg, const Vec& noise,
              std::uint64_t iter = 0);

// Runs cfg.n_iters steps, drawing cfg.batch_size fresh data samples per step
// and averaging H over the batch. Data draws and Gaussian noise come from
// disjoint substreams of (seed, chain_id), so the run is bit-reproducible.
// States are recorded at iterations burn_in, burn_in+stride, ... giving
// floor((n_iters - burn_in)/stride) + 1 entries.
Trajectory run_chain(const GradientOracle& oracle, const SamplerConfig& cfg,
                     const KineticState& init, Algo algo, std::uint64_t stride = 1);

inline constexpr double kReferenceEta = 1e-5;

// Long-horizon SGHMC chain at a small fixed step size, used as the surrogate
// for the invariant law in Wasserstein diagnostics.
Trajectory run_reference_chain(const GradientOracle& oracle, SamplerConfig cfg,
                               const KineticState& init, std::uint64_t stride = 1,
                               double reference_eta = kReferenceEta);

// Helper for drawing an initial state with theta, v ~ N(0, I) on the init
// substream of (seed, chain_id).
KineticState gaussian_init(std::size_t dim, std::uint64_t seed, std::uint64_t chain_id);

}  // namespace sgmcmc
