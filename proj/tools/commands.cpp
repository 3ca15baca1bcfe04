#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "sgmcmc/certify.hpp"
#include "sgmcmc/diagnostics.hpp"
#include "sgmcmc/hedging.hpp"
#include "sgmcmc/neuralnet.hpp"
#include "sgmcmc/oracle.hpp"
#include "sgmcmc/runio.hpp"
#include "sgmcmc/sampler.hpp"

namespace sgmcmc::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

TargetDistribution parse_dist(const std::string& kind, double loc, double scale) {
  if (kind == "gaussian") return TargetDistribution::gaussian(loc, scale);
  if (kind == "logistic") return TargetDistribution::logistic(loc, scale);
  if (kind == "gumbel") return TargetDistribution::gumbel(loc, scale);
  throw std::invalid_argument("unknown distribution '" + kind + "'");
}

struct NamedDist {
  std::string label;
  TargetDistribution dist;
};

std::vector<NamedDist> table_grid() {
  return {
      {"gaussian(-1,1)", TargetDistribution::gaussian(-1.0, 1.0)},
      {"gaussian(1,2)", TargetDistribution::gaussian(1.0, 2.0)},
      {"gaussian(3,5)", TargetDistribution::gaussian(3.0, 5.0)},
      {"logistic(0,1)", TargetDistribution::logistic(0.0, 1.0)},
      {"logistic(-1,1)", TargetDistribution::logistic(-1.0, 1.0)},
      {"logistic(-3,3)", TargetDistribution::logistic(-3.0, 3.0)},
      {"gumbel(0,1)", TargetDistribution::gumbel(0.0, 1.0)},
      {"gumbel(0,2)", TargetDistribution::gumbel(0.0, 2.0)},
      {"gumbel(1,2)", TargetDistribution::gumbel(1.0, 2.0)},
  };
}

json common_to_json(const CommonOpts& c) {
  json j;
  j["eta"] = c.eta;
  j["gamma"] = c.gamma;
  j["beta"] = c.beta;
  j["lambda_r"] = c.lambda_r;
  j["iters"] = c.iters;
  j["seeds"] = c.seeds;
  j["seed_base"] = c.seed_base;
  j["algo"] = c.algo;
  j["out_dir"] = c.out_dir;
  j["stride"] = c.stride;
  j["batch"] = c.batch;
  j["gaussian_method"] = RngStream::gaussian_method();
  return j;
}

std::vector<Algo> algos_from(const std::string& name) {
  if (name == "sghmc") return {Algo::kSghmc};
  if (name == "sgld") return {Algo::kSgld};
  if (name == "both") return {Algo::kSghmc, Algo::kSgld};
  throw std::invalid_argument("unknown algo '" + name + "' (want sghmc, sgld, or both)");
}

}  // namespace

// ---------------------------------------------------------------------------
// quantile

namespace {

struct QuantileSeedRun {
  std::uint64_t seed = 0;
  double estimate = 0.0;
  std::uint64_t iters_to_eps = 0;
  bool hit_eps = false;
  double time_to_eps_s = 0.0;
  double chain_seconds = 0.0;
};

QuantileSeedRun run_quantile_seed(const QuantileProblem& prob, Algo algo,
                                  const CommonOpts& c, std::uint64_t seed, double inf_u,
                                  double epsilon) {
  QuantileOracle oracle(prob);
  SamplerConfig cfg;
  cfg.eta = c.eta;
  cfg.gamma = c.gamma;
  cfg.beta = c.beta;
  cfg.n_iters = c.iters;
  cfg.seed = seed;
  cfg.batch_size = c.batch;

  const KineticState init = gaussian_init(1, seed, 0);
  const auto t0 = Clock::now();
  const Trajectory traj = run_chain(oracle, cfg, init, algo, c.stride);
  const double chain_seconds = seconds_since(t0);

  QuantileSeedRun out;
  out.seed = seed;
  out.estimate = traj.final_state.theta[0];
  out.chain_seconds = chain_seconds;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double u = u_quantile(traj.states[i].theta[0], prob);
    if (u - inf_u < epsilon) {
      out.hit_eps = true;
      out.iters_to_eps = i * c.stride;
      out.time_to_eps_s = c.iters == 0 ? 0.0
                                       : chain_seconds * static_cast<double>(out.iters_to_eps) /
                                             static_cast<double>(c.iters);
      break;
    }
  }
  return out;
}

}  // namespace

int cmd_quantile(const QuantileOpts& o) {
  CommonOpts c = o.common;
  if (c.eta == 0.0) c.eta = 1e-3;
  if (c.beta == 0.0) c.beta = 1e10;
  if (c.iters == 0 && !c.iters_given) c.iters = 1000000;
  if (c.stride == 0) c.stride = 1000;

  std::vector<NamedDist> rows;
  if (o.dist == "grid") {
    rows = table_grid();
  } else {
    const TargetDistribution d = parse_dist(o.dist, o.loc, o.scale);
    rows = {{d.name(), d}};
  }
  const std::vector<Algo> algos = algos_from(c.algo);

  RunResult result;
  result.command = "quantile";
  result.config = common_to_json(c);
  result.config["dist"] = o.dist;
  result.config["loc"] = o.loc;
  result.config["scale"] = o.scale;
  result.config["q"] = o.q;
  result.config["epsilon"] = o.epsilon;

  CsvWriter csv({"dist", "q", "algo", "seed", "q_star", "estimate", "abs_error", "sq_error",
                 "iters_to_eps", "hit_eps"});
  json summary_rows = json::array();
  const auto t_run = Clock::now();

  for (const auto& row : rows) {
    QuantileProblem prob(row.dist, o.q, c.lambda_r);
    const double q_star = true_quantile(row.dist, o.q);
    const double inf_u = minimize_u_quantile(prob).value;

    for (Algo algo : algos) {
      double est_sum = 0.0, sq_sum = 0.0, time_sum = 0.0;
      int hits = 0;
      for (int s = 0; s < c.seeds; ++s) {
        const std::uint64_t seed = c.seed_base + static_cast<std::uint64_t>(s);
        const QuantileSeedRun run = run_quantile_seed(prob, algo, c, seed, inf_u, o.epsilon);
        est_sum += run.estimate;
        sq_sum += (run.estimate - q_star) * (run.estimate - q_star);
        if (run.hit_eps) {
          time_sum += run.time_to_eps_s;
          ++hits;
        }
        csv.add_row({row.label, CsvWriter::num(o.q), algo_name(algo), CsvWriter::num(seed),
                     CsvWriter::num(q_star), CsvWriter::num(run.estimate),
                     CsvWriter::num(std::fabs(run.estimate - q_star)),
                     CsvWriter::num((run.estimate - q_star) * (run.estimate - q_star)),
                     CsvWriter::num(run.iters_to_eps), run.hit_eps ? "1" : "0"});
      }
      json agg;
      agg["dist"] = row.label;
      agg["q"] = o.q;
      agg["algo"] = algo_name(algo);
      agg["q_star"] = q_star;
      agg["mean_estimate"] = est_sum / c.seeds;
      agg["mse"] = sq_sum / c.seeds;
      agg["seeds_hit_eps"] = hits;
      agg["mean_time_to_eps_s"] = hits > 0 ? time_sum / hits : -1.0;
      summary_rows.push_back(agg);
    }
  }

  result.wall_seconds = seconds_since(t_run);
  result.summary["rows"] = summary_rows;
  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  csv.write(dir / "results.csv");
  result.write(dir);
  std::cout << "quantile: wrote " << (dir / "results.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// quadratic

int cmd_quadratic(const QuadraticOpts& o) {
  CommonOpts c = o.common;
  if (c.eta == 0.0) c.eta = 1e-3;
  if (c.beta == 0.0) c.beta = 10.0;
  if (c.iters == 0 && !c.iters_given) c.iters = 1000000;
  if (c.stride == 0) c.stride = 10;
  const std::uint64_t burn = o.burn_in == 0 ? c.iters / 10 : o.burn_in;

  QuadraticOracle oracle(o.a, o.noise_sd);
  const std::vector<Algo> algos = algos_from(c.algo == "both" ? "sghmc" : c.algo);

  RunResult result;
  result.command = "quadratic";
  result.config = common_to_json(c);
  result.config["a"] = o.a;
  result.config["noise_sd"] = o.noise_sd;
  result.config["burn_in"] = burn;

  CsvWriter csv({"algo", "seed", "var_theta", "var_v"});
  const auto t_run = Clock::now();
  double vt_sum = 0.0, vv_sum = 0.0;
  int count = 0;
  for (Algo algo : algos) {
    for (int s = 0; s < c.seeds; ++s) {
      SamplerConfig cfg;
      cfg.eta = c.eta;
      cfg.gamma = c.gamma;
      cfg.beta = c.beta;
      cfg.n_iters = c.iters;
      cfg.burn_in = burn;
      cfg.seed = c.seed_base + static_cast<std::uint64_t>(s);
      cfg.batch_size = c.batch;
      const Trajectory traj =
          run_chain(oracle, cfg, KineticState{{0.0}, {0.0}}, algo, c.stride);
      Vec thetas, vs;
      for (const auto& st : traj.states) {
        thetas.push_back(st.theta[0]);
        vs.push_back(st.v[0]);
      }
      const double vt = variance_of(thetas);
      const double vv = variance_of(vs);
      vt_sum += vt;
      vv_sum += vv;
      ++count;
      csv.add_row({algo_name(algo), CsvWriter::num(cfg.seed), CsvWriter::num(vt),
                   CsvWriter::num(vv)});
    }
  }

  result.wall_seconds = seconds_since(t_run);
  result.summary["mean_var_theta"] = vt_sum / count;
  result.summary["mean_var_v"] = vv_sum / count;
  result.summary["target_var_theta"] = 1.0 / (c.beta * o.a);
  result.summary["target_var_v"] = 1.0 / c.beta;

  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  csv.write(dir / "results.csv");
  result.write(dir);
  std::cout << "quadratic: Var(theta)=" << format_double(vt_sum / count)
            << " Var(v)=" << format_double(vv_sum / count) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rate

namespace {

struct MarginalSample {
  std::vector<double> thetas;  // sorted
};

// Thinned theta samples from the stationary stretch of one chain.
std::vector<double> chain_window_samples(const QuantileProblem& prob, Algo algo, double eta,
                                         const CommonOpts& c, std::uint64_t seed,
                                         double burn_time, double window_time,
                                         std::size_t keep) {
  QuantileOracle oracle(prob);
  SamplerConfig cfg;
  cfg.eta = eta;
  cfg.gamma = c.gamma;
  cfg.beta = c.beta;
  cfg.seed = seed;
  cfg.chain_id = 1;  // separate stream family from the risk chains
  cfg.burn_in = static_cast<std::uint64_t>(burn_time / eta);
  cfg.n_iters = cfg.burn_in + static_cast<std::uint64_t>(window_time / eta);
  const std::uint64_t span = cfg.n_iters - cfg.burn_in;
  const std::uint64_t stride = std::max<std::uint64_t>(1, span / keep);

  const Trajectory traj =
      run_chain(oracle, cfg, gaussian_init(1, seed, 1), algo, stride);
  std::vector<double> out;
  out.reserve(traj.states.size());
  for (const auto& st : traj.states) out.push_back(st.theta[0]);
  return out;
}

}  // namespace

int cmd_rate(const RateOpts& o) {
  CommonOpts c = o.common;
  if (c.beta == 0.0) c.beta = 1e10;
  if (c.seeds == 5) c.seeds = 16;  // marginal-sampling chains for the W distances

  const TargetDistribution dist = parse_dist(o.dist, o.loc, o.scale);
  QuantileProblem prob(dist, o.q, c.lambda_r);
  const double inf_u = minimize_u_quantile(prob).value;
  const std::vector<Algo> algos = algos_from(c.algo == "both" ? "sghmc" : c.algo);
  const Algo algo = algos[0];

  RunResult result;
  result.command = "rate";
  result.config = common_to_json(c);
  result.config["dist"] = dist.name();
  result.config["q"] = o.q;
  result.config["etas"] = o.etas;
  result.config["horizon_time"] = o.horizon_time;
  result.config["risk_seeds"] = o.risk_seeds;
  result.config["w2_burn_time"] = o.w2_burn_time;
  result.config["w2_window_time"] = o.w2_window_time;
  result.config["ref_eta"] = o.ref_eta;

  const auto t_run = Clock::now();

  // Reference marginal from the small-step chain, one block per group.
  const int groups = std::max(1, o.groups);
  const int seeds_per_group = std::max(1, c.seeds / groups);
  const std::size_t keep_per_seed = 2000;
  const std::size_t block = keep_per_seed * static_cast<std::size_t>(seeds_per_group);

  std::vector<std::vector<double>> ref_blocks(groups);
  {
    QuantileOracle oracle(prob);
    SamplerConfig cfg;
    cfg.eta = o.ref_eta;
    cfg.gamma = c.gamma;
    cfg.beta = c.beta;
    cfg.seed = c.seed_base + 977;
    cfg.chain_id = 2;
    cfg.burn_in = static_cast<std::uint64_t>(50.0 / o.ref_eta);
    const std::uint64_t stride = 300;
    cfg.n_iters = cfg.burn_in + stride * block * static_cast<std::uint64_t>(groups);
    const Trajectory traj =
        run_reference_chain(oracle, cfg, gaussian_init(1, cfg.seed, 2), stride, o.ref_eta);
    std::size_t pos = 0;
    for (int g = 0; g < groups; ++g) {
      for (std::size_t i = 0; i < block && pos < traj.states.size(); ++i, ++pos)
        ref_blocks[g].push_back(traj.states[pos].theta[0]);
      std::sort(ref_blocks[g].begin(), ref_blocks[g].end());
    }
  }

  CsvWriter csv({"eta", "n", "excess_risk_mean", "excess_risk_se", "excess_risk_min",
                 "excess_risk_max", "excess_risk_sd", "w1", "w2", "w2_se", "slope",
                 "intercept", "r2"});

  struct EtaRow {
    double eta;
    std::uint64_t n;
    RiskReport risk;
    double w1, w2, w2_se;
  };
  std::vector<EtaRow> rows;

  for (double eta : o.etas) {
    // Law of the iterates at fixed n*eta: per seed, u is averaged over a
    // trailing window [3T/4, T] of thinned states, which estimates
    // E[u(theta_n)] with far less variance than the single endpoint.
    const std::uint64_t n = static_cast<std::uint64_t>(o.horizon_time / eta);
    const std::uint64_t window_start = 3 * n / 4;
    const std::uint64_t stride = std::max<std::uint64_t>(1, (n - window_start) / 32);
    std::vector<double> seed_risks;
    for (int s = 0; s < o.risk_seeds; ++s) {
      QuantileOracle oracle(prob);
      SamplerConfig cfg;
      cfg.eta = eta;
      cfg.gamma = c.gamma;
      cfg.beta = c.beta;
      cfg.seed = c.seed_base + static_cast<std::uint64_t>(s);
      cfg.n_iters = n;
      cfg.burn_in = window_start;
      const Trajectory traj =
          run_chain(oracle, cfg, gaussian_init(1, cfg.seed, 0), algo, stride);
      double acc = 0.0;
      for (const auto& st : traj.states) acc += u_quantile(st.theta[0], prob) - inf_u;
      seed_risks.push_back(acc / static_cast<double>(traj.states.size()));
    }
    RiskReport risk;
    risk.eta = eta;
    risk.n_iters = n;
    risk.excess_risk_mean = mean_of(seed_risks);
    risk.excess_risk_sd = std::sqrt(variance_of(seed_risks));
    risk.excess_risk_se =
        risk.excess_risk_sd / std::sqrt(static_cast<double>(seed_risks.size()));
    risk.excess_risk_min = *std::min_element(seed_risks.begin(), seed_risks.end());
    risk.excess_risk_max = *std::max_element(seed_risks.begin(), seed_risks.end());

    // Grouped W1/W2 against the reference marginal.
    std::vector<double> w1s, w2s;
    for (int g = 0; g < groups; ++g) {
      std::vector<double> pool;
      for (int s = 0; s < seeds_per_group; ++s) {
        const std::uint64_t seed =
            c.seed_base + static_cast<std::uint64_t>(g * seeds_per_group + s);
        auto samples = chain_window_samples(prob, algo, eta, c, seed, o.w2_burn_time,
                                            o.w2_window_time, keep_per_seed);
        pool.insert(pool.end(), samples.begin(), samples.end());
      }
      std::sort(pool.begin(), pool.end());
      std::vector<double> ref = ref_blocks[g];
      // equal-size coupling
      const std::size_t m = std::min(pool.size(), ref.size());
      pool.resize(m);
      ref.resize(m);
      w1s.push_back(empirical_w1_1d(pool, ref));
      w2s.push_back(empirical_w2_1d(pool, ref));
    }
    EtaRow row;
    row.eta = eta;
    row.n = n;
    row.risk = risk;
    row.w1 = mean_of(w1s);
    row.w2 = mean_of(w2s);
    row.w2_se = std::sqrt(variance_of(w2s) / static_cast<double>(w2s.size()));
    rows.push_back(row);
  }

  std::vector<std::pair<double, double>> fit_pts;
  for (const auto& r : rows) fit_pts.emplace_back(r.eta, r.risk.excess_risk_mean);
  const RateFit fit = rate_slope(fit_pts);

  for (const auto& r : rows) {
    csv.add_row({CsvWriter::num(r.eta), CsvWriter::num(r.n),
                 CsvWriter::num(r.risk.excess_risk_mean), CsvWriter::num(r.risk.excess_risk_se),
                 CsvWriter::num(r.risk.excess_risk_min), CsvWriter::num(r.risk.excess_risk_max),
                 CsvWriter::num(r.risk.excess_risk_sd), CsvWriter::num(r.w1),
                 CsvWriter::num(r.w2), CsvWriter::num(r.w2_se), CsvWriter::num(fit.slope),
                 CsvWriter::num(fit.intercept), CsvWriter::num(fit.r_squared)});
  }

  result.wall_seconds = seconds_since(t_run);
  result.summary["slope"] = fit.slope;
  result.summary["intercept"] = fit.intercept;
  result.summary["r_squared"] = fit.r_squared;
  json w2j = json::array();
  for (const auto& r : rows) {
    w2j.push_back({{"eta", r.eta}, {"w1", r.w1}, {"w2", r.w2}, {"w2_se", r.w2_se}});
  }
  result.summary["wasserstein"] = w2j;

  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  csv.write(dir / "rate.csv");
  result.write(dir);
  std::cout << "rate: slope=" << format_double(fit.slope) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// certify

int cmd_certify(const CertifyOpts& o) {
  CommonOpts c = o.common;
  if (c.eta == 0.0) c.eta = 1e-3;
  if (c.beta == 0.0) c.beta = 1e10;

  const TargetDistribution dist = parse_dist(o.dist, o.loc, o.scale);
  QuantileProblem prob(dist, o.q, c.lambda_r);
  QuantileOracle oracle(prob);

  RunResult result;
  result.command = "certify";
  result.config = common_to_json(c);
  result.config["dist"] = dist.name();
  result.config["q"] = o.q;
  result.config["mc_samples"] = o.mc_samples;
  result.config["check_samples"] = o.check_samples;

  const auto t_run = Clock::now();
  AssumptionInputs inp =
      quantile_assumption_inputs(prob, c.gamma, c.beta, o.mc_samples, c.seed_base + 4);
  const DerivedConstants dc = derive_constants(inp);

  if (c.eta > dc.eta_max) {
    result.warnings.push_back("eta " + format_double(c.eta) + " exceeds eta_max " +
                              format_double(dc.eta_max) +
                              " (bound is sufficient, not necessary; run continues)");
  }

  const double q_star = true_quantile(dist, o.q);
  std::vector<Vec> thetas = {{0.0}, {q_star / 2.0}, {q_star}};
  std::vector<CheckReport> checks =
      check_unbiasedness(oracle, thetas, o.check_samples, c.seed_base + 1);
  const double L = 2.0 * (c.lambda_r + dist.density_sup());
  checks.push_back(check_avg_lipschitz(oracle, L, 100, o.check_samples / 100, 5.0,
                                       c.seed_base + 2));
  checks.push_back(
      check_dissipativity(oracle, 2.0 * c.lambda_r, 0.0, o.check_samples, 5.0, c.seed_base + 3));

  json jc;
  jc["a_prime"] = dc.a_prime;
  jc["b_prime"] = dc.b_prime;
  jc["b_prime_mean_sq"] = dc.b_prime_mean_sq;
  jc["b_prime_sq_mean"] = dc.b_prime_sq_mean;
  jc["lambda"] = dc.lambda;
  jc["A_c"] = dc.A_c;
  jc["L1_tilde"] = dc.L1_tilde;
  jc["C1_tilde"] = dc.C1_tilde;
  jc["K1"] = dc.K1;
  jc["K2"] = dc.K2;
  jc["K3"] = dc.K3;
  jc["K1_tilde"] = dc.K1_tilde;
  jc["c3_tilde"] = dc.c3_tilde;
  jc["c3_hat"] = dc.c3_hat;
  jc["c4_tilde"] = dc.c4_tilde;
  jc["c4_hat"] = dc.c4_hat;
  jc["c6_tilde"] = dc.c6_tilde;
  jc["c7_tilde"] = dc.c7_tilde;
  jc["c8_tilde"] = dc.c8_tilde;
  jc["K_tilde"] = dc.K_tilde;
  jc["eta_max"] = dc.eta_max;
  jc["notes"] = dc.notes;
  jc["inputs"] = {{"L1", inp.L1},
                  {"L2", inp.L2},
                  {"rho", inp.rho},
                  {"L", inp.L},
                  {"a", inp.a},
                  {"b", inp.b},
                  {"gamma", inp.gamma},
                  {"beta", inp.beta},
                  {"dim", inp.dim},
                  {"u0", inp.u0},
                  {"h0_norm", inp.h0_norm},
                  {"moment_2rho2", inp.moment_2rho2},
                  {"moment_4rho4", inp.moment_4rho4},
                  {"moment_K1_mean", inp.moment_K1_mean},
                  {"moment_K1_sq", inp.moment_K1_sq},
                  {"moment_Fstar_sq", inp.moment_Fstar_sq}};

  json jchecks = json::array();
  bool all_pass = true;
  for (const auto& ch : checks) {
    jchecks.push_back({{"name", ch.name},
                       {"statistic", ch.statistic},
                       {"threshold", ch.threshold},
                       {"pass", ch.pass},
                       {"detail", ch.detail}});
    all_pass = all_pass && ch.pass;
  }

  result.wall_seconds = seconds_since(t_run);
  result.summary["constants"] = jc;
  result.summary["checks"] = jchecks;
  result.summary["all_checks_pass"] = all_pass;

  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  {
    json report;
    report["constants"] = jc;
    report["checks"] = jchecks;
    std::ofstream f(dir / "report.json");
    f << report.dump(2) << '\n';
  }
  CsvWriter csv({"name", "value"});
  csv.add_row({"a_prime", CsvWriter::num(dc.a_prime)});
  csv.add_row({"b_prime", CsvWriter::num(dc.b_prime)});
  csv.add_row({"lambda", CsvWriter::num(dc.lambda)});
  csv.add_row({"A_c", CsvWriter::num(dc.A_c)});
  csv.add_row({"K1", CsvWriter::num(dc.K1)});
  csv.add_row({"K2", CsvWriter::num(dc.K2)});
  csv.add_row({"K3", CsvWriter::num(dc.K3)});
  csv.add_row({"K_tilde", CsvWriter::num(dc.K_tilde)});
  csv.add_row({"eta_max", CsvWriter::num(dc.eta_max)});
  csv.write(dir / "constants.csv");
  result.write(dir);

  std::cout << "certify: eta_max=" << format_double(dc.eta_max)
            << " all_checks_pass=" << (all_pass ? "true" : "false") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// transfer

int cmd_transfer(const TransferOpts& o) {
  CommonOpts c = o.common;
  if (c.eta == 0.0) c.eta = 1e-2;
  if (c.beta == 0.0) c.beta = 1e8;
  if (c.lambda_r == 1e-5) c.lambda_r = 1e-6;  // pipeline default
  if (c.batch == 1) c.batch = 32;

  RunResult result;
  result.command = "transfer";
  result.config = common_to_json(c);
  result.config["d1"] = o.d1;
  result.config["d2"] = o.d2;
  result.config["d3"] = o.d3;
  result.config["samples"] = o.samples;
  result.config["pre_iters"] = o.pre_iters;
  result.config["tlfn_iters"] = o.tlfn_iters;
  result.config["clip_c"] = o.clip_c;

  const auto t_run = Clock::now();

  PretrainConfig pre;
  pre.d1 = o.d1;
  pre.d2 = o.d2;
  pre.d3 = o.d3;
  pre.n_samples = o.samples;
  pre.eta = c.eta;
  pre.lambda_r = c.lambda_r;
  pre.beta = c.beta;
  pre.gamma = c.gamma;
  pre.batch_size = c.batch;
  pre.n_iters = o.pre_iters;
  pre.seed = c.seed_base;
  const PretrainResult pretrained = threelfn_pretrain(pre);

  // Transfer task: approximate y(z) = -|1.2 z1 + 0.9 z2 - 0.8|^2 on [0,1]^2.
  auto target = [](const Vec& z) -> Vec {
    const double s = 1.2 * z[0] + 0.9 * z[1] - 0.8;
    return {-s * s};
  };
  Dataset all = make_dataset(target, o.samples, 2, c.seed_base + 1);
  const std::size_t n_train = static_cast<std::size_t>(0.8 * all.size());
  Dataset train(all.begin(), all.begin() + n_train);
  Dataset val(all.begin() + n_train, all.end());

  TLFNParams init;
  init.W0 = pretrained.W0_fixed;
  init.W2 = pretrained.W2_fixed;
  init.clip_c = o.clip_c;
  RngStream init_rng = make_stream(c.seed_base, 7, Substream::kInit);
  init.W1 = xavier_matrix(o.d2, o.d1, init_rng);
  init.b0 = xavier_vector(o.d1, 2, o.d1, init_rng);
  init.b1 = xavier_vector(o.d2, o.d1, o.d2, init_rng);

  TlfnTrainConfig tcfg;
  tcfg.eta = c.eta;
  tcfg.lambda_r = c.lambda_r;
  tcfg.beta = c.beta;
  tcfg.gamma = c.gamma;
  tcfg.batch_size = c.batch;
  tcfg.n_iters = o.tlfn_iters;
  tcfg.seed = c.seed_base;
  const TlfnTrainResult trained = tlfn_train(init, train, val, tcfg);

  CsvWriter csv({"phase", "iter", "train_mse", "val_mse"});
  for (const auto& pt : pretrained.curve)
    csv.add_row({"pretrain", CsvWriter::num(pt.iter), CsvWriter::num(pt.train_mse),
                 CsvWriter::num(pt.val_mse)});
  for (const auto& pt : trained.curve)
    csv.add_row({"transfer", CsvWriter::num(pt.iter), CsvWriter::num(pt.train_mse),
                 CsvWriter::num(pt.val_mse)});

  result.wall_seconds = seconds_since(t_run);
  result.summary["pretrain"] = {{"train_mse_init", pretrained.train_mse_init},
                                {"train_mse_final", pretrained.train_mse_final},
                                {"val_mse_init", pretrained.val_mse_init},
                                {"val_mse_final", pretrained.val_mse_final}};
  result.summary["transfer"] = {{"train_mse_init", trained.train_mse_init},
                                {"train_mse_final", trained.train_mse_final},
                                {"val_mse_init", trained.val_mse_init},
                                {"val_mse_final", trained.val_mse_final}};

  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  csv.write(dir / "curve.csv");
  {
    std::ofstream f(dir / "tlfn_params.json");
    f << tlfn_snapshot(trained.params) << '\n';
  }
  {
    std::ofstream f(dir / "threelfn_params.json");
    f << threelfn_snapshot(pretrained.trained) << '\n';
  }
  result.write(dir);
  std::cout << "transfer: val MSE " << format_double(trained.val_mse_init) << " -> "
            << format_double(trained.val_mse_final) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// hedge

namespace {

MarketConfig market_from_json(const json& j, MarketConfig base) {
  MarketConfig cfg = base;
  if (j.contains("p")) cfg.p = j["p"].get<int>();
  if (j.contains("m")) cfg.m = j["m"].get<int>();
  if (j.contains("r_tilde")) cfg.r_tilde = j["r_tilde"].get<double>();
  if (j.contains("Delta")) cfg.Delta = j["Delta"].get<double>();
  if (j.contains("K")) cfg.K = j["K"].get<int>();
  if (j.contains("strike")) cfg.strike = j["strike"].get<double>();
  if (j.contains("gamma_pen")) cfg.gamma_pen = j["gamma_pen"].get<double>();
  if (j.contains("W0_wealth")) cfg.W0_wealth = j["W0_wealth"].get<double>();

  if (j.contains("S0")) {
    if (j["S0"].is_number()) {
      cfg.S0.assign(cfg.p, j["S0"].get<double>());
    } else {
      cfg.S0 = j["S0"].get<std::vector<double>>();
    }
  } else if (cfg.S0.size() != static_cast<std::size_t>(cfg.p)) {
    cfg.S0.assign(cfg.p, 1.0);
  }

  if (j.contains("lambda_tilde")) {
    if (j["lambda_tilde"].is_number()) {
      cfg.lambda_tilde.assign(cfg.m, j["lambda_tilde"].get<double>());
    } else {
      cfg.lambda_tilde = j["lambda_tilde"].get<std::vector<double>>();
    }
  } else if (cfg.lambda_tilde.size() != static_cast<std::size_t>(cfg.m)) {
    cfg.lambda_tilde.assign(cfg.m, 0.0);
  }

  if (j.contains("Sigma")) {
    const auto rows = j["Sigma"].get<std::vector<std::vector<double>>>();
    cfg.Sigma = Mat(cfg.p, cfg.m);
    for (int i = 0; i < cfg.p; ++i)
      for (int k = 0; k < cfg.m; ++k) cfg.Sigma(i, k) = rows.at(i).at(k);
  } else if (j.contains("sigma_diag") || j.contains("sigma_offdiag")) {
    const double diag = j.value("sigma_diag", 0.15);
    const double off = j.value("sigma_offdiag", 0.0);
    cfg.Sigma = Mat(cfg.p, cfg.m, off);
    for (int i = 0; i < std::min(cfg.p, cfg.m); ++i) cfg.Sigma(i, i) = diag;
  } else if (cfg.Sigma.rows != static_cast<std::size_t>(cfg.p) ||
             cfg.Sigma.cols != static_cast<std::size_t>(cfg.m)) {
    cfg.Sigma = Mat(cfg.p, cfg.m, 0.0);
    for (int i = 0; i < std::min(cfg.p, cfg.m); ++i) cfg.Sigma(i, i) = 0.15;
  }
  return cfg;
}

json market_to_json(const MarketConfig& cfg) {
  json j;
  j["p"] = cfg.p;
  j["m"] = cfg.m;
  j["r_tilde"] = cfg.r_tilde;
  j["Delta"] = cfg.Delta;
  j["K"] = cfg.K;
  j["strike"] = cfg.strike;
  j["gamma_pen"] = cfg.gamma_pen;
  j["W0_wealth"] = cfg.W0_wealth;
  j["S0"] = cfg.S0;
  j["lambda_tilde"] = cfg.lambda_tilde;
  std::vector<std::vector<double>> sigma(cfg.p, std::vector<double>(cfg.m));
  for (int i = 0; i < cfg.p; ++i)
    for (int k = 0; k < cfg.m; ++k) sigma[i][k] = cfg.Sigma(i, k);
  j["Sigma"] = sigma;
  return j;
}

}  // namespace

int cmd_hedge(const HedgeOpts& o) {
  CommonOpts c = o.common;
  if (c.eta == 0.0) c.eta = 0.05;
  if (c.beta == 0.0) c.beta = 1e12;
  if (c.batch == 1) c.batch = 128;

  // precedence: scenario defaults < config file < explicit flags
  MarketConfig market = MarketConfig::scenario(o.scenario);
  market.K = o.K;
  if (!o.config_file.empty()) {
    std::ifstream f(o.config_file);
    if (!f) throw std::invalid_argument("hedge: cannot open config file " + o.config_file);
    json j;
    f >> j;
    market = market_from_json(j, market);
    if (o.k_given) market.K = o.K;
  }
  market.validate();

  HedgeTrainConfig tc;
  tc.optimizer = c.algo == "sgld" ? HedgeOptimizer::kSgld : HedgeOptimizer::kSghmc;
  tc.eta = c.eta;
  tc.gamma = c.gamma;
  tc.beta = c.beta;
  tc.steps = o.steps;
  tc.batch = c.batch;
  tc.samples_per_step = o.samples_per_step;
  tc.nu = o.nu;
  tc.test_samples = o.test_samples;
  tc.seed = c.seed_base;

  RunResult result;
  result.command = "hedge";
  result.config = common_to_json(c);
  result.config["market"] = market_to_json(market);
  result.config["scenario"] = o.scenario;
  result.config["steps"] = tc.steps;
  result.config["samples_per_step"] = tc.samples_per_step;
  result.config["nu"] = tc.nu;
  result.config["test_samples"] = tc.test_samples;
  result.warnings.push_back(
      "action set: network outputs lie in (-1,1)^p (tanh); the scenario tables list "
      "D = [0,1]^p");

  const auto t_run = Clock::now();
  const HedgeTrainResult res = hedge_train(market, tc);

  CsvWriter csv({"step", "train_loss", "test_score"});
  for (const auto& pt : res.curve)
    csv.add_row({CsvWriter::num(pt.step), CsvWriter::num(pt.train_loss),
                 CsvWriter::num(pt.test_score)});

  result.wall_seconds = seconds_since(t_run);
  result.summary["initial_train_loss"] = res.initial_train_loss;
  result.summary["final_train_loss"] = res.final_train_loss;
  result.summary["initial_test_score"] = res.initial_test_score;
  result.summary["final_test_score"] = res.final_test_score;

  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  csv.write(dir / "curve.csv");
  result.write(dir);
  std::cout << "hedge: train loss " << format_double(res.initial_train_loss) << " -> "
            << format_double(res.final_train_loss) << "\n";
  return 0;
}

}  // namespace sgmcmc::cli
