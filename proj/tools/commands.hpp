#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgmcmc::cli {

struct CommonOpts {
  double eta = 0.0;  // 0 = use the subcommand default
  double gamma = 0.5;
  double beta = 0.0;
  double lambda_r = 1e-5;
  std::uint64_t iters = 0;
  bool iters_given = false;  // --iters 0 is a valid explicit request
  int seeds = 5;
  std::uint64_t seed_base = 0;
  std::string algo = "both";  // sghmc | sgld | both
  std::string out_dir = "runs/latest";
  std::uint64_t stride = 0;
  int batch = 1;
};

struct QuantileOpts {
  CommonOpts common;
  std::string dist = "grid";  // gaussian | logistic | gumbel | grid
  double loc = 0.0;
  double scale = 1.0;
  double q = 0.95;
  double epsilon = 1e-4;
};

struct QuadraticOpts {
  CommonOpts common;
  double a = 1.0;
  double noise_sd = 0.0;
  std::uint64_t burn_in = 0;
};

struct RateOpts {
  CommonOpts common;
  std::string dist = "logistic";
  double loc = 0.0;
  double scale = 1.0;
  double q = 0.95;
  std::vector<double> etas = {4e-3, 2e-3, 1e-3, 5e-4};
  double horizon_time = 58.0;    // n*eta held fixed for the risk estimates
  int risk_seeds = 1024;         // replicate chains for the excess-risk mean
  double w2_burn_time = 30.0;    // warmup before marginal sampling
  double w2_window_time = 200.0; // sampling window length
  double ref_eta = 1e-5;
  int groups = 4;
};

struct CertifyOpts {
  CommonOpts common;
  std::string dist = "logistic";
  double loc = 0.0;
  double scale = 1.0;
  double q = 0.95;
  std::uint64_t mc_samples = 1000000;
  std::uint64_t check_samples = 1000000;
};

struct TransferOpts {
  CommonOpts common;
  std::size_t d1 = 30, d2 = 30, d3 = 30;
  std::size_t samples = 10000;
  std::uint64_t pre_iters = 3000;
  std::uint64_t tlfn_iters = 3000;
  double clip_c = 1.0;
};

struct HedgeOpts {
  CommonOpts common;
  std::string scenario = "table-col1";
  std::string config_file;
  int steps = 200;
  int samples_per_step = 20000;
  int nu = 5;
  int test_samples = 10000;
  int K = 20;
  bool k_given = false;  // --K passed explicitly, beats the config file
};

int cmd_quantile(const QuantileOpts& opts);
int cmd_quadratic(const QuadraticOpts& opts);
int cmd_rate(const RateOpts& opts);
int cmd_certify(const CertifyOpts& opts);
int cmd_transfer(const TransferOpts& opts);
int cmd_hedge(const HedgeOpts& opts);

}  // namespace sgmcmc::cli
