#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sgmcmc/sampler.hpp"

namespace {

void add_common(CLI::App* cmd, sgmcmc::cli::CommonOpts& c) {
  cmd->add_option("--eta", c.eta, "step size (0 = subcommand default)");
  cmd->add_option("--gamma", c.gamma, "friction coefficient");
  cmd->add_option("--beta", c.beta, "inverse temperature (0 = subcommand default)");
  cmd->add_option("--lambda-r", c.lambda_r, "L2 regularization constant");
  cmd->add_option("--iters", c.iters, "iterations per chain (defaults per subcommand)")
      ->each([&c](const std::string&) { c.iters_given = true; });
  cmd->add_option("--seeds", c.seeds, "number of seeds");
  cmd->add_option("--seed-base", c.seed_base, "first seed; seeds are seed-base..+seeds-1");
  cmd->add_option("--algo", c.algo, "sghmc | sgld | both")
      ->check(CLI::IsMember({"sghmc", "sgld", "both"}));
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--stride", c.stride, "thinning stride (0 = subcommand default)");
  cmd->add_option("--batch", c.batch, "gradient minibatch size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-gradient kinetic sampling experiments"};
  app.require_subcommand(1);

  sgmcmc::cli::QuantileOpts qo;
  CLI::App* quantile = app.add_subcommand(
      "quantile", "Quantile estimation over the distribution grid or one distribution.\n"
                  "CSV columns: dist,q,algo,seed,q_star,estimate,abs_error,sq_error,"
                  "iters_to_eps,hit_eps");
  add_common(quantile, qo.common);
  quantile->add_option("--dist", qo.dist, "gaussian | logistic | gumbel | grid");
  quantile->add_option("--loc", qo.loc, "location parameter");
  quantile->add_option("--scale", qo.scale, "scale parameter");
  quantile->add_option("--q", qo.q, "quantile level in (0,1)");
  quantile->add_option("--epsilon", qo.epsilon, "excess-risk tolerance for timing");

  sgmcmc::cli::QuadraticOpts do_;
  CLI::App* quadratic = app.add_subcommand(
      "quadratic", "Gaussian-stationarity sanity target.\n"
                   "CSV columns: algo,seed,var_theta,var_v");
  add_common(quadratic, do_.common);
  quadratic->add_option("--a", do_.a, "curvature of u = a*theta^2/2");
  quadratic->add_option("--noise-sd", do_.noise_sd, "gradient noise scale");
  quadratic->add_option("--burn-in", do_.burn_in, "burn-in iterations (0 = iters/10)");

  sgmcmc::cli::RateOpts ro;
  CLI::App* rate = app.add_subcommand(
      "rate", "Step-size sweep: excess risk at fixed n*eta plus Wasserstein distances to a "
              "reference chain.\nCSV columns: eta,n,excess_risk_mean,excess_risk_se,"
              "excess_risk_min,excess_risk_max,excess_risk_sd,w1,w2,w2_se,slope,intercept,r2");
  add_common(rate, ro.common);
  rate->add_option("--dist", ro.dist, "gaussian | logistic | gumbel");
  rate->add_option("--loc", ro.loc, "location parameter");
  rate->add_option("--scale", ro.scale, "scale parameter");
  rate->add_option("--q", ro.q, "quantile level");
  rate->add_option("--etas", ro.etas, "step sizes to sweep");
  rate->add_option("--horizon-time", ro.horizon_time, "fixed n*eta for risk estimates");
  rate->add_option("--risk-seeds", ro.risk_seeds, "replicate chains for the excess risk");
  rate->add_option("--w2-burn-time", ro.w2_burn_time, "warmup time before marginal sampling");
  rate->add_option("--w2-window-time", ro.w2_window_time, "marginal sampling window");
  rate->add_option("--ref-eta", ro.ref_eta, "reference chain step size");
  rate->add_option("--groups", ro.groups, "replicate groups for W2 standard errors");

  sgmcmc::cli::CertifyOpts co;
  CLI::App* certify = app.add_subcommand(
      "certify", "Evaluate the explicit constants, eta_max, and Monte-Carlo assumption "
                 "checks for the quantile oracle.\nCSV columns: name,value");
  add_common(certify, co.common);
  certify->add_option("--dist", co.dist, "gaussian | logistic | gumbel");
  certify->add_option("--loc", co.loc, "location parameter");
  certify->add_option("--scale", co.scale, "scale parameter");
  certify->add_option("--q", co.q, "quantile level");
  certify->add_option("--mc-samples", co.mc_samples, "draws for moment estimation");
  certify->add_option("--check-samples", co.check_samples, "draws per assumption check");

  sgmcmc::cli::TransferOpts to;
  CLI::App* transfer = app.add_subcommand(
      "transfer", "Pretrain the three-hidden-layer net, freeze (W0, W2), train the "
                  "two-hidden-layer net on the transfer task.\n"
                  "CSV columns: phase,iter,train_mse,val_mse");
  add_common(transfer, to.common);
  transfer->add_option("--d1", to.d1, "first hidden width");
  transfer->add_option("--d2", to.d2, "second hidden width");
  transfer->add_option("--d3", to.d3, "third hidden width (pretraining net)");
  transfer->add_option("--samples", to.samples, "dataset size per task");
  transfer->add_option("--pre-iters", to.pre_iters, "pretraining iterations");
  transfer->add_option("--tlfn-iters", to.tlfn_iters, "transfer-stage iterations");
  transfer->add_option("--clip-c", to.clip_c, "weight clip constant c");

  sgmcmc::cli::HedgeOpts ho;
  CLI::App* hedge = app.add_subcommand(
      "hedge", "Asymmetric-risk hedging on the discrete Black-Scholes-Merton market.\n"
               "CSV columns: step,train_loss,test_score");
  add_common(hedge, ho.common);
  hedge->add_option("--scenario", ho.scenario,
                    "table-col1 | table-col2 | table-col3 | table-col4");
  hedge->add_option("--config", ho.config_file, "JSON market config overriding the scenario");
  hedge->add_option("--steps", ho.steps, "training steps");
  hedge->add_option("--samples-per-step", ho.samples_per_step, "episodes generated per step");
  hedge->add_option("--nu", ho.nu, "hidden width of the policy networks");
  hedge->add_option("--test-samples", ho.test_samples, "held-out episodes for the test score");
  CLI::Option* k_opt = hedge->add_option("--K", ho.K, "rebalancing dates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (quantile->parsed()) return sgmcmc::cli::cmd_quantile(qo);
    if (quadratic->parsed()) return sgmcmc::cli::cmd_quadratic(do_);
    if (rate->parsed()) return sgmcmc::cli::cmd_rate(ro);
    if (certify->parsed()) return sgmcmc::cli::cmd_certify(co);
    if (transfer->parsed()) return sgmcmc::cli::cmd_transfer(to);
    if (hedge->parsed()) {
      ho.k_given = k_opt->count() > 0;
      return sgmcmc::cli::cmd_hedge(ho);
    }
  } catch (const sgmcmc::DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
