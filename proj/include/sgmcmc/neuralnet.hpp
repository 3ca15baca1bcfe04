#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sgmcmc/linalg.hpp"
#include "sgmcmc/rng.hpp"

namespace sgmcmc {

// Weight clipper f(v) = c*tanh(v/c) and its derivative 1 - tanh^2(v/c).
inline double clip_f(double v, double c) { return c * std::tanh(v / c); }
inline double clip_f_prime(double v, double c) {
  const double t = std::tanh(v / c);
  return 1.0 - t * t;
}

// Two-hidden-layer network with fixed outer weights (transfer setting):
//   out_j = sum_n W2[j][n] * sigmoid( sum_k f(W1[n][k]) * relu(<W0 row k, z>
//           + f(b0[k])) + b1[n] ).
// Trainable parameters are (W1, b0, b1), flattened as [W1 row-major], b0, b1.
struct TLFNParams {
  Mat W0;  // d1 x m1, fixed
  Mat W2;  // m2 x d2, fixed
  Mat W1;  // d2 x d1, trainable
  Vec b0;  // d1
  Vec b1;  // d2
  double clip_c = 1.0;

  std::size_t d1() const { return W0.rows; }
  std::size_t d2() const { return W2.cols; }
  std::size_t m1() const { return W0.cols; }
  std::size_t m2() const { return W2.rows; }
  std::size_t trainable_dim() const { return d1() * d2() + d1() + d2(); }

  void validate() const;
  Vec flatten_trainable() const;
  void unflatten_trainable(const Vec& theta);
};

Vec tlfn_forward(const TLFNParams& params, const Vec& z);

// Squared error plus L2 regularizer over the trainable parameters.
double tlfn_loss(const TLFNParams& params, const Vec& y, const Vec& z, double lambda_r);

// Stochastic gradient H = F + G of the regularized squared loss:
// F = 2*lambda_r*theta; G carries the residual through the fixed outer
// weights with strict ReLU indicator 1{<W0 row, z> + f(b0) > 0}.
Vec tlfn_grad(const TLFNParams& params, const Vec& y, const Vec& z, double lambda_r);

// Uniform Xavier bound sqrt(6 / (fan_in + fan_out)).
double xavier_bound(std::size_t fan_in, std::size_t fan_out);
Mat xavier_matrix(std::size_t rows, std::size_t cols, RngStream& rng);
Vec xavier_vector(std::size_t n, std::size_t fan_in, std::size_t fan_out, RngStream& rng);

// Three-hidden-layer pretraining network: relu, tanh, tanh hidden
// activations, linear output, all parameters trainable.
struct ThreeLFNParams {
  Mat W0;  // d1 x m1
  Mat W1;  // d2 x d1
  Mat W2;  // d3 x d2
  Mat W3;  // m2 x d3
  Vec b0;  // d1
  Vec b1;  // d2
  Vec b2;  // d3

  std::size_t dim() const {
    return W0.a.size() + W1.a.size() + W2.a.size() + W3.a.size() + b0.size() + b1.size() +
           b2.size();
  }
  Vec flatten() const;
  void unflatten(const Vec& theta);
  static ThreeLFNParams xavier(std::size_t d1, std::size_t d2, std::size_t d3, std::size_t m1,
                               std::size_t m2, RngStream& rng);
};

Vec threelfn_forward(const ThreeLFNParams& params, const Vec& z);

struct Sample {
  Vec z;
  Vec y;
};

using Dataset = std::vector<Sample>;

// n i.i.d. samples with z ~ U(0,1)^m1 and y = target(z).
Dataset make_dataset(const std::function<Vec(const Vec&)>& target, std::size_t n,
                     std::size_t m1, std::uint64_t seed);

double dataset_mse(const Dataset& data, const std::function<Vec(const Vec&)>& predict);

struct PretrainConfig {
  std::size_t d1 = 30, d2 = 30, d3 = 30;
  std::size_t m1 = 2, m2 = 1;
  std::size_t n_samples = 10000;
  double train_fraction = 0.8;
  double eta = 1e-2;
  double lambda_r = 1e-6;
  double beta = 1e8;
  double gamma = 0.5;
  int batch_size = 32;
  std::uint64_t n_iters = 3000;
  std::uint64_t seed = 0;
};

struct CurvePoint {
  std::uint64_t iter = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct PretrainResult {
  ThreeLFNParams trained;
  Mat W0_fixed;  // trained first-layer weights
  Mat W2_fixed;  // trained output weights, reused as the TLFN's fixed W2
  double train_mse_init = 0.0, train_mse_final = 0.0;
  double val_mse_init = 0.0, val_mse_final = 0.0;
  std::vector<CurvePoint> curve;
};

// Trains the ThreeLFN on y(z) = |2 z1 + 2 z2 - 1.5|^3 over [0,1]^2 via the
// kinetic recursion with gradients from the reverse-mode tape, then returns
// the trained (W0, W3) pair for the transfer stage. Aborts with a
// DivergenceError on non-finite loss.
PretrainResult threelfn_pretrain(const PretrainConfig& cfg);

struct TlfnTrainConfig {
  double eta = 1e-2;
  double lambda_r = 1e-6;
  double beta = 1e8;
  double gamma = 0.5;
  int batch_size = 32;
  std::uint64_t n_iters = 3000;
  std::uint64_t seed = 0;
};

struct TlfnTrainResult {
  TLFNParams params;
  double train_mse_init = 0.0, train_mse_final = 0.0;
  double val_mse_init = 0.0, val_mse_final = 0.0;
  std::vector<CurvePoint> curve;
};

// Trains the TLFN's (W1, b0, b1) on the given train/validation split with
// frozen (W0, W2), using the closed-form stochastic gradient.
TlfnTrainResult tlfn_train(TLFNParams init, const Dataset& train, const Dataset& val,
                           const TlfnTrainConfig& cfg);

// Parameter snapshots: JSON with a shape header plus flat arrays in the
// documented flattening order ([W1] row-major, b0, b1 for the TLFN's
// trainables; [W0],[W1],[W2],[W3],b0,b1,b2 for the pretraining net).
std::string tlfn_snapshot(const TLFNParams& params);
TLFNParams tlfn_from_snapshot(const std::string& json_text);
std::string threelfn_snapshot(const ThreeLFNParams& params);
ThreeLFNParams threelfn_from_snapshot(const std::string& json_text);

}  // namespace sgmcmc
