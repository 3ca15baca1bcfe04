// Acceptance suite: runs every acceptance criterion end to end, one
// PASS/FAIL line each, exit code = number of failed criteria.
//
// Usage: acceptance <path-to-cli> <work-dir>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgmcmc/certify.hpp"
#include "sgmcmc/diagnostics.hpp"
#include "sgmcmc/hedging.hpp"
#include "sgmcmc/neuralnet.hpp"
#include "sgmcmc/oracle.hpp"
#include "sgmcmc/sampler.hpp"

using namespace sgmcmc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;
int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %s: %s\n", pass ? "PASS" : "FAIL", idx, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct CliRun {
  int exit_code = -1;
  double wall_seconds = 0.0;
  fs::path out_dir;
};

CliRun run_cli(const std::string& args, const std::string& tag) {
  CliRun r;
  r.out_dir = g_work / tag;
  fs::create_directories(r.out_dir);
  const std::string cmd = g_cli + " " + args + " --out " + r.out_dir.string() + " > " +
                          (r.out_dir / "stdout.txt").string() + " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json load_summary(const fs::path& dir) {
  std::ifstream f(dir / "summary.json");
  json j;
  f >> j;
  return j;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

// 1. Quantile reproduction and 4. SGHMC vs SGLD time-to-tolerance share one
// grid run at the settings eta=1e-3, gamma=0.5, beta=1e10, lambda_r=1e-5.
void criteria_1_and_4() {
  const CliRun run = run_cli("quantile", "quantile_grid");
  if (run.exit_code != 0) {
    report(1, "quantile-table-rows", false, "cli exited with " + std::to_string(run.exit_code));
    report(4, "sghmc-beats-sgld-time-to-eps", false, "cli failed");
    return;
  }
  const json summary = load_summary(run.out_dir)["summary"];

  struct Target {
    std::string dist;
    double q_star;
  };
  const std::vector<Target> targets = {
      {"gaussian(-1,1)", 0.645}, {"logistic(0,1)", 2.944}, {"gumbel(0,1)", 2.970}};

  bool rows_ok = true;
  std::string detail;
  for (const auto& t : targets) {
    for (const auto& row : summary["rows"]) {
      if (row["dist"] == t.dist && row["algo"] == "sghmc") {
        const double est = row["mean_estimate"].get<double>();
        const double err = std::fabs(est - t.q_star);
        rows_ok = rows_ok && err <= 0.08;
        detail += t.dist + " est=" + fmt(est) + " |err|=" + fmt(err) + "; ";
      }
    }
  }
  const double per_row_seconds = run.wall_seconds / 9.0;
  rows_ok = rows_ok && per_row_seconds <= 60.0;
  detail += "wall/row=" + fmt(per_row_seconds) + "s (limit 60)";
  report(1, "quantile-table-rows +-0.08", rows_ok, detail);

  int sghmc_wins = 0, rows = 0;
  for (const auto& row : summary["rows"]) {
    if (row["algo"] != "sghmc") continue;
    for (const auto& other : summary["rows"]) {
      if (other["algo"] == "sgld" && other["dist"] == row["dist"]) {
        ++rows;
        const double th = row["mean_time_to_eps_s"].get<double>();
        const double tl = other["mean_time_to_eps_s"].get<double>();
        if (th >= 0.0 && (tl < 0.0 || th <= tl)) ++sghmc_wins;
      }
    }
  }
  report(4, "sghmc-beats-sgld-time-to-eps",
         rows == 9 && sghmc_wins >= 6,
         "sghmc faster or equal in " + std::to_string(sghmc_wins) + "/" + std::to_string(rows) +
             " configurations (need >= 6)");
}

// 2. Convergence-rate slope and 7. Wasserstein monotonicity share the rate
// sweep at its calibrated defaults.
void criteria_2_and_7() {
  const CliRun run = run_cli("rate", "rate_sweep");
  if (run.exit_code != 0) {
    report(2, "rate-slope", false, "cli exited with " + std::to_string(run.exit_code));
    report(7, "w2-monotone-in-eta", false, "cli failed");
    return;
  }
  const json summary = load_summary(run.out_dir)["summary"];
  const double slope = summary["slope"].get<double>();
  const bool slope_ok = slope >= 0.35 && slope <= 0.85 && run.wall_seconds <= 300.0;
  report(2, "rate-slope in [0.35, 0.85]", slope_ok,
         "slope=" + fmt(slope) + " wall=" + fmt(run.wall_seconds) + "s (limit 300)");

  // The sweep is emitted in descending eta; W2 must not increase as eta
  // shrinks, up to twice the combined Monte-Carlo standard error.
  const auto& wrows = summary["wasserstein"];
  bool monotone = true;
  std::string detail;
  for (std::size_t i = 0; i + 1 < wrows.size(); ++i) {
    const double w_hi = wrows[i]["w2"].get<double>();
    const double w_lo = wrows[i + 1]["w2"].get<double>();
    const double se_hi = wrows[i]["w2_se"].get<double>();
    const double se_lo = wrows[i + 1]["w2_se"].get<double>();
    const double slack = 2.0 * std::sqrt(se_hi * se_hi + se_lo * se_lo);
    if (w_lo > w_hi + slack) monotone = false;
    detail += fmt(w_hi) + ">=" + fmt(w_lo) + "(+-" + fmt(slack) + ") ";
  }
  monotone = monotone && run.wall_seconds <= 300.0;
  report(7, "w2-monotone-in-eta (2xSE slack)", monotone, detail);
}

// 3. Gaussian stationarity of the quadratic target.
void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  QuadraticOracle oracle(1.0, 0.0);
  double vt_sum = 0.0, vv_sum = 0.0;
  const int n_seeds = 5;
  for (int s = 0; s < n_seeds; ++s) {
    SamplerConfig cfg;
    cfg.eta = 1e-3;
    cfg.gamma = 0.5;
    cfg.beta = 10.0;
    cfg.n_iters = 1000000;
    cfg.burn_in = 100000;
    cfg.seed = static_cast<std::uint64_t>(s);
    const Trajectory traj = run_chain(oracle, cfg, KineticState{{0.0}, {0.0}}, Algo::kSghmc, 10);
    Vec thetas, vs;
    for (const auto& st : traj.states) {
      thetas.push_back(st.theta[0]);
      vs.push_back(st.v[0]);
    }
    vt_sum += variance_of(thetas);
    vv_sum += variance_of(vs);
  }
  const double vt = vt_sum / n_seeds;
  const double vv = vv_sum / n_seeds;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = std::fabs(vt - 0.1) <= 0.01 && std::fabs(vv - 0.1) <= 0.01 && wall <= 10.0;
  report(3, "gaussian-stationarity Var within 10% of 1/beta", ok,
         "Var(theta)=" + fmt(vt) + " Var(v)=" + fmt(vv) + " target 0.1, wall=" + fmt(wall) +
             "s (limit 10)");
}

// 5. Gradient fidelity: closed-form network gradient and the tape gradient
// both against central finite differences, kink-excluded, <= 1e-5 relative.
void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(1234, 0, 0);

  auto rand_vec = [&rng](std::size_t n, double s) {
    Vec v(n);
    for (auto& x : v) x = (2.0 * rng.next_uniform() - 1.0) * s;
    return v;
  };

  // TLFN part
  int tlfn_bad = 0;
  {
    const std::size_t d1 = 8, d2 = 7, m1 = 3, m2 = 2;
    const double lambda_r = 1e-3;
    for (int pt = 0; pt < 100; ++pt) {
      TLFNParams p;
      p.W0 = xavier_matrix(d1, m1, rng);
      p.W2 = xavier_matrix(m2, d2, rng);
      p.W1 = xavier_matrix(d2, d1, rng);
      p.b0 = xavier_vector(d1, m1, d1, rng);
      p.b1 = xavier_vector(d2, d1, d2, rng);
      p.clip_c = 1.0;

      Vec z;
      for (int attempt = 0;; ++attempt) {
        z = rand_vec(m1, 2.0);
        Vec pre = p.W0.matvec(z);
        bool ok = true;
        for (std::size_t k = 0; k < pre.size(); ++k)
          if (std::fabs(pre[k] + clip_f(p.b0[k], p.clip_c)) < 1e-3) ok = false;
        if (ok || attempt > 5000) break;
      }
      const Vec y = rand_vec(m2, 2.0);
      const Vec grad = tlfn_grad(p, y, z, lambda_r);
      Vec theta = p.flatten_trainable();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::fabs(theta[i]));
        Vec tu = theta, td = theta;
        tu[i] += h;
        td[i] -= h;
        TLFNParams pu = p, pd = p;
        pu.unflatten_trainable(tu);
        pd.unflatten_trainable(td);
        const double fd =
            (tlfn_loss(pu, y, z, lambda_r) - tlfn_loss(pd, y, z, lambda_r)) / (2.0 * h);
        if (std::fabs(grad[i] - fd) > 1e-5 * std::max(1.0, std::fabs(fd))) ++tlfn_bad;
      }
    }
  }

  // hedging micro-instance part
  int hedge_bad = 0;
  {
    MarketConfig cfg;
    cfg.p = cfg.m = 1;
    cfg.K = 2;
    cfg.strike = 1.0;
    cfg.Sigma = Mat(1, 1);
    cfg.Sigma(0, 0) = 0.15;
    cfg.lambda_tilde = {0.1};
    cfg.S0 = {1.0};
    int tested = 0;
    while (tested < 25) {
      PolicyParams pp = PolicyParams::xavier(cfg.K, 2, cfg.p, rng);
      const auto returns = sample_returns(cfg, rng);
      const RolloutResult plain = rollout(cfg, pp, returns);
      if (std::fabs(plain.terminal_wealth - plain.claim) < 1e-3) continue;
      Vec grad;
      rollout_grad(cfg, pp, returns, grad);
      Vec theta = pp.flatten();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::fabs(theta[i]));
        Vec up = theta, dn = theta;
        up[i] += h;
        dn[i] -= h;
        PolicyParams pu = pp, pd = pp;
        pu.unflatten(up);
        pd.unflatten(dn);
        const double fd =
            (rollout(cfg, pu, returns).loss - rollout(cfg, pd, returns).loss) / (2.0 * h);
        if (std::fabs(grad[i] - fd) > 1e-5 * std::max(1.0, std::fabs(fd))) ++hedge_bad;
      }
      ++tested;
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(5, "gradient-fidelity vs finite differences",
         tlfn_bad == 0 && hedge_bad == 0 && wall <= 20.0,
         "network mismatches=" + std::to_string(tlfn_bad) +
             " rollout mismatches=" + std::to_string(hedge_bad) + " wall=" + fmt(wall) +
             "s (limits 10+10)");
}

// 6. Assumption certification across the three distribution families.
void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda_r = 1e-5;
  bool all_ok = true;
  std::string detail;
  const std::vector<TargetDistribution> dists = {TargetDistribution::gaussian(0.0, 1.0),
                                                 TargetDistribution::logistic(0.0, 1.0),
                                                 TargetDistribution::gumbel(0.0, 1.0)};
  for (const auto& dist : dists) {
    QuantileProblem prob(dist, 0.95, lambda_r);
    QuantileOracle oracle(prob);
    const double q_star = true_quantile(dist, 0.95);

    bool ok = true;
    for (const auto& rep :
         check_unbiasedness(oracle, {{0.0}, {q_star / 2.0}, {q_star}}, 1000000))
      ok = ok && rep.pass;
    const double L = 2.0 * (lambda_r + dist.density_sup());
    ok = ok && check_avg_lipschitz(oracle, L, 100, 10000).pass;
    ok = ok && check_dissipativity(oracle, 2.0 * lambda_r, 0.0, 1000000).pass;
    all_ok = all_ok && ok;
    detail += dist.name() + (ok ? " ok; " : " FAILED; ");
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  all_ok = all_ok && wall <= 60.0;
  report(6, "assumption-certification at 1e6 samples", all_ok,
         detail + "wall=" + fmt(wall) + "s (limit 60)");
}

// 8. Hedging training descent on Table column 1.
void criterion_8() {
  const CliRun run = run_cli(
      "hedge --steps 50 --eta 0.5 --gamma 0.5 --test-samples 10000", "hedge_descent");
  if (run.exit_code != 0) {
    report(8, "hedge-training-descent", false,
           "cli exited with " + std::to_string(run.exit_code));
    return;
  }
  const json s = load_summary(run.out_dir)["summary"];
  const double init_train = s["initial_train_loss"].get<double>();
  const double final_train = s["final_train_loss"].get<double>();
  const double init_test = s["initial_test_score"].get<double>();
  const double final_test = s["final_test_score"].get<double>();
  const bool descent = final_train <= 0.8 * init_train;
  const bool test_ok = std::isfinite(final_test) && final_test <= init_test;
  report(8, "hedge-training-descent (final <= 0.8x initial)",
         descent && test_ok && run.wall_seconds <= 600.0,
         "train " + fmt(init_train) + " -> " + fmt(final_train) + " (ratio " +
             fmt(final_train / init_train) + ", need <= 0.8); test " + fmt(init_test) + " -> " +
             fmt(final_test) + "; wall=" + fmt(run.wall_seconds) + "s (limit 600)");
}

// 9. Transfer-learning pipeline halves the validation MSE.
void criterion_9() {
  const CliRun run = run_cli("transfer", "transfer_pipeline");
  if (run.exit_code != 0) {
    report(9, "transfer-pipeline", false, "cli exited with " + std::to_string(run.exit_code));
    return;
  }
  const json s = load_summary(run.out_dir)["summary"]["transfer"];
  const double init = s["val_mse_init"].get<double>();
  const double fin = s["val_mse_final"].get<double>();
  const bool ok = fin <= 0.5 * init && run.wall_seconds <= 600.0;
  report(9, "transfer-pipeline val MSE halved", ok,
         "val MSE " + fmt(init) + " -> " + fmt(fin) + " (ratio " + fmt(fin / init) +
             ", need <= 0.5); wall=" + fmt(run.wall_seconds) + "s (limit 600)");
}

// 10. Byte-identical CSV bodies on rerun for every subcommand.
void criterion_10() {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"quantile", "quantile --dist logistic --iters 20000 --seeds 2 --stride 500"},
      {"quadratic", "quadratic --iters 50000 --seeds 2"},
      {"rate",
       "rate --risk-seeds 8 --seeds 8 --horizon-time 5 --w2-burn-time 2 --w2-window-time 5"},
      {"certify", "certify --mc-samples 20000 --check-samples 20000"},
      {"transfer",
       "transfer --samples 400 --pre-iters 80 --tlfn-iters 80 --d1 8 --d2 8 --d3 8"},
      {"hedge", "hedge --steps 2 --samples-per-step 128 --K 5 --test-samples 100"},
  };
  bool all_ok = true;
  std::string detail;
  for (const auto& [name, args] : cases) {
    const CliRun a = run_cli(args, "det_" + name + "_a");
    const CliRun b = run_cli(args, "det_" + name + "_b");
    bool ok = a.exit_code == 0 && b.exit_code == 0;
    int compared = 0;
    if (ok) {
      for (const auto& entry : fs::directory_iterator(a.out_dir)) {
        if (entry.path().extension() != ".csv") continue;
        const fs::path other = b.out_dir / entry.path().filename();
        ++compared;
        if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) ok = false;
      }
      ok = ok && compared > 0;
    }
    all_ok = all_ok && ok;
    detail += name + (ok ? " ok; " : " DIFFERS; ");
  }
  report(10, "csv-bodies-byte-identical-on-rerun", all_ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <cli-path> <work-dir>\n";
    return 99;
  }
  g_cli = argv[1];
  g_work = argv[2];
  fs::create_directories(g_work);

  criteria_1_and_4();
  criteria_2_and_7();
  criterion_3();
  criterion_5();
  criterion_6();
  criterion_8();
  criterion_9();
  criterion_10();

  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures;
}
