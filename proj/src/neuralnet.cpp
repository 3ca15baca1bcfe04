#include "sgmcmc/neuralnet.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "sgmcmc/autodiff.hpp"
#include "sgmcmc/sampler.hpp"

namespace sgmcmc {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// First-hidden-layer pre-activations <W0 row k, z> + f(b0[k]).
Vec layer1_pre(const TLFNParams& p, const Vec& z) {
  Vec pre = p.W0.matvec(z);
  for (std::size_t k = 0; k < pre.size(); ++k) pre[k] += clip_f(p.b0[k], p.clip_c);
  return pre;
}

}  // namespace

void TLFNParams::validate() const {
  if (!(clip_c > 0.0)) throw std::invalid_argument("TLFNParams: clip constant must be > 0");
  if (W1.rows != d2() || W1.cols != d1() || b0.size() != d1() || b1.size() != d2())
    throw std::invalid_argument("TLFNParams: inconsistent shapes");
  for (std::size_t k = 0; k < W0.rows; ++k) {
    bool nonzero = false;
    for (std::size_t i = 0; i < W0.cols; ++i)
      if (W0(k, i) != 0.0) {
        nonzero = true;
        break;
      }
    if (!nonzero) throw std::invalid_argument("TLFNParams: W0 has an all-zero row");
  }
}

Vec TLFNParams::flatten_trainable() const {
  Vec theta;
  theta.reserve(trainable_dim());
  theta.insert(theta.end(), W1.a.begin(), W1.a.end());
  theta.insert(theta.end(), b0.begin(), b0.end());
  theta.insert(theta.end(), b1.begin(), b1.end());
  return theta;
}

void TLFNParams::unflatten_trainable(const Vec& theta) {
  if (theta.size() != trainable_dim())
    throw std::invalid_argument("TLFNParams: flat vector has wrong length");
  std::size_t off = 0;
  std::copy(theta.begin(), theta.begin() + W1.a.size(), W1.a.begin());
  off += W1.a.size();
  std::copy(theta.begin() + off, theta.begin() + off + b0.size(), b0.begin());
  off += b0.size();
  std::copy(theta.begin() + off, theta.end(), b1.begin());
}

Vec tlfn_forward(const TLFNParams& p, const Vec& z) {
  const std::size_t n1 = p.d1(), n2 = p.d2(), nout = p.m2();
  const Vec pre1 = layer1_pre(p, z);
  Vec act1(n1);
  for (std::size_t k = 0; k < n1; ++k) act1[k] = pre1[k] > 0.0 ? pre1[k] : 0.0;

  Vec out(nout, 0.0);
  for (std::size_t n = 0; n < n2; ++n) {
    double s = p.b1[n];
    for (std::size_t k = 0; k < n1; ++k) s += clip_f(p.W1(n, k), p.clip_c) * act1[k];
    const double h = sigmoid(s);
    for (std::size_t j = 0; j < nout; ++j) out[j] += p.W2(j, n) * h;
  }
  return out;
}

double tlfn_loss(const TLFNParams& p, const Vec& y, const Vec& z, double lambda_r) {
  const Vec out = tlfn_forward(p, z);
  double loss = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double r = y[j] - out[j];
    loss += r * r;
  }
  return loss + lambda_r * norm_sq(p.flatten_trainable());
}

Vec tlfn_grad(const TLFNParams& p, const Vec& y, const Vec& z, double lambda_r) {
  const std::size_t n1 = p.d1(), n2 = p.d2(), nout = p.m2();
  if (y.size() != nout || z.size() != p.m1())
    throw std::invalid_argument("tlfn_grad: input shape mismatch");

  const Vec pre1 = layer1_pre(p, z);
  Vec act1(n1);
  for (std::size_t k = 0; k < n1; ++k) act1[k] = pre1[k] > 0.0 ? pre1[k] : 0.0;

  Vec hidden(n2), sp(n2);
  Vec out(nout, 0.0);
  for (std::size_t n = 0; n < n2; ++n) {
    double s = p.b1[n];
    for (std::size_t k = 0; k < n1; ++k) s += clip_f(p.W1(n, k), p.clip_c) * act1[k];
    hidden[n] = sigmoid(s);
    sp[n] = hidden[n] * (1.0 - hidden[n]);
    for (std::size_t j = 0; j < nout; ++j) out[j] += p.W2(j, n) * hidden[n];
  }

  // common[n] = -2 sum_j (y_j - out_j) W2[j][n] * sigmoid'(pre2_n)
  Vec common(n2, 0.0);
  for (std::size_t n = 0; n < n2; ++n) {
    double s = 0.0;
    for (std::size_t j = 0; j < nout; ++j) s += (y[j] - out[j]) * p.W2(j, n);
    common[n] = -2.0 * s * sp[n];
  }

  Vec theta = p.flatten_trainable();
  Vec grad(theta.size());
  // F = 2*lambda_r*theta
  for (std::size_t i = 0; i < theta.size(); ++i) grad[i] = 2.0 * lambda_r * theta[i];

  // G over W1, row-major (n, k)
  for (std::size_t n = 0; n < n2; ++n) {
    const double cn = common[n];
    for (std::size_t k = 0; k < n1; ++k) {
      grad[n * n1 + k] += cn * clip_f_prime(p.W1(n, k), p.clip_c) * act1[k];
    }
  }
  // G over b0
  const std::size_t off_b0 = n1 * n2;
  for (std::size_t k = 0; k < n1; ++k) {
    if (!(pre1[k] > 0.0)) continue;  // strict indicator
    double s = 0.0;
    for (std::size_t n = 0; n < n2; ++n) s += common[n] * clip_f(p.W1(n, k), p.clip_c);
    grad[off_b0 + k] += s * clip_f_prime(p.b0[k], p.clip_c);
  }
  // G over b1
  const std::size_t off_b1 = off_b0 + n1;
  for (std::size_t n = 0; n < n2; ++n) grad[off_b1 + n] += common[n];

  return grad;
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Mat xavier_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  const double bound = xavier_bound(cols, rows);
  Mat m(rows, cols);
  for (auto& x : m.a) x = (2.0 * rng.next_uniform() - 1.0) * bound;
  return m;
}

Vec xavier_vector(std::size_t n, std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double bound = xavier_bound(fan_in, fan_out);
  Vec v(n);
  for (auto& x : v) x = (2.0 * rng.next_uniform() - 1.0) * bound;
  return v;
}

Vec ThreeLFNParams::flatten() const {
  Vec theta;
  theta.reserve(dim());
  for (const Mat* m : {&W0, &W1, &W2, &W3}) theta.insert(theta.end(), m->a.begin(), m->a.end());
  for (const Vec* v : {&b0, &b1, &b2}) theta.insert(theta.end(), v->begin(), v->end());
  return theta;
}

void ThreeLFNParams::unflatten(const Vec& theta) {
  if (theta.size() != dim()) throw std::invalid_argument("ThreeLFNParams: wrong flat length");
  std::size_t off = 0;
  for (Mat* m : {&W0, &W1, &W2, &W3}) {
    std::copy(theta.begin() + off, theta.begin() + off + m->a.size(), m->a.begin());
    off += m->a.size();
  }
  for (Vec* v : {&b0, &b1, &b2}) {
    std::copy(theta.begin() + off, theta.begin() + off + v->size(), v->begin());
    off += v->size();
  }
}

ThreeLFNParams ThreeLFNParams::xavier(std::size_t d1, std::size_t d2, std::size_t d3,
                                      std::size_t m1, std::size_t m2, RngStream& rng) {
  ThreeLFNParams p;
  p.W0 = xavier_matrix(d1, m1, rng);
  p.W1 = xavier_matrix(d2, d1, rng);
  p.W2 = xavier_matrix(d3, d2, rng);
  p.W3 = xavier_matrix(m2, d3, rng);
  p.b0 = xavier_vector(d1, m1, d1, rng);
  p.b1 = xavier_vector(d2, d1, d2, rng);
  p.b2 = xavier_vector(d3, d2, d3, rng);
  return p;
}

Vec threelfn_forward(const ThreeLFNParams& p, const Vec& z) {
  Vec h1 = p.W0.matvec(z);
  for (std::size_t k = 0; k < h1.size(); ++k) {
    h1[k] += p.b0[k];
    h1[k] = h1[k] > 0.0 ? h1[k] : 0.0;
  }
  Vec h2 = p.W1.matvec(h1);
  for (std::size_t n = 0; n < h2.size(); ++n) h2[n] = std::tanh(h2[n] + p.b1[n]);
  Vec h3 = p.W2.matvec(h2);
  for (std::size_t m = 0; m < h3.size(); ++m) h3[m] = std::tanh(h3[m] + p.b2[m]);
  return p.W3.matvec(h3);
}

Dataset make_dataset(const std::function<Vec(const Vec&)>& target, std::size_t n,
                     std::size_t m1, std::uint64_t seed) {
  RngStream rng(seed, 0, static_cast<std::uint64_t>(Substream::kData));
  Dataset data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec z(m1);
    for (auto& x : z) x = rng.next_uniform();
    data.push_back({z, target(z)});
  }
  return data;
}

double dataset_mse(const Dataset& data, const std::function<Vec(const Vec&)>& predict) {
  if (data.empty()) throw std::invalid_argument("dataset_mse: empty dataset");
  double s = 0.0;
  for (const auto& sample : data) {
    const Vec out = predict(sample.z);
    s += norm_sq(subbed(sample.y, out));
  }
  return s / static_cast<double>(data.size());
}

namespace {

struct TapeNet {
  ad::Tape tape;
  ad::NodeId w0, w1, w2, w3, b0, b1, b2;
};

// Records the mean squared error of a minibatch on a fresh tape.
ad::NodeId record_batch_loss(TapeNet& net, const ThreeLFNParams& p, const Dataset& data,
                             const std::vector<std::size_t>& idx) {
  auto& t = net.tape;
  net.w0 = t.input(p.W0.a);
  net.w1 = t.input(p.W1.a);
  net.w2 = t.input(p.W2.a);
  net.w3 = t.input(p.W3.a);
  net.b0 = t.input(p.b0);
  net.b1 = t.input(p.b1);
  net.b2 = t.input(p.b2);

  ad::NodeId total = 0;
  bool first = true;
  for (std::size_t i : idx) {
    const Sample& s = data[i];
    const ad::NodeId z = t.constant(s.z);
    const ad::NodeId h1 = t.relu(t.add(t.matvec(net.w0, z, p.W0.rows, p.W0.cols), net.b0));
    const ad::NodeId h2 = t.tanh_op(t.add(t.matvec(net.w1, h1, p.W1.rows, p.W1.cols), net.b1));
    const ad::NodeId h3 = t.tanh_op(t.add(t.matvec(net.w2, h2, p.W2.rows, p.W2.cols), net.b2));
    const ad::NodeId out = t.matvec(net.w3, h3, p.W3.rows, p.W3.cols);
    const ad::NodeId loss = t.sum(t.square(t.sub(t.constant(s.y), out)));
    total = first ? loss : t.add(total, loss);
    first = false;
  }
  return t.scale(total, 1.0 / static_cast<double>(idx.size()));
}

}  // namespace

PretrainResult threelfn_pretrain(const PretrainConfig& cfg) {
  if (cfg.m1 != 2)
    throw std::invalid_argument("threelfn_pretrain: pretraining target is bivariate");
  auto target = [](const Vec& z) -> Vec {
    const double s = std::fabs(2.0 * z[0] + 2.0 * z[1] - 1.5);
    return {s * s * s};
  };

  Dataset all = make_dataset(target, cfg.n_samples, cfg.m1, cfg.seed);
  const std::size_t n_train =
      static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(all.size()));
  Dataset train(all.begin(), all.begin() + n_train);
  Dataset val(all.begin() + n_train, all.end());

  RngStream init_rng = make_stream(cfg.seed, 0, Substream::kInit);
  ThreeLFNParams params =
      ThreeLFNParams::xavier(cfg.d1, cfg.d2, cfg.d3, cfg.m1, cfg.m2, init_rng);

  auto predict = [&params](const Vec& z) { return threelfn_forward(params, z); };

  PretrainResult res;
  res.train_mse_init = dataset_mse(train, predict);
  res.val_mse_init = dataset_mse(val, predict);

  SamplerConfig scfg;
  scfg.eta = cfg.eta;
  scfg.gamma = cfg.gamma;
  scfg.beta = cfg.beta;
  scfg.seed = cfg.seed;

  RngStream data_rng = make_stream(cfg.seed, 0, Substream::kData);
  RngStream noise_rng = make_stream(cfg.seed, 0, Substream::kNoise);

  KineticState state;
  state.theta = params.flatten();
  state.v.assign(state.theta.size(), 0.0);

  Vec noise(state.theta.size());
  std::vector<std::size_t> idx(static_cast<std::size_t>(cfg.batch_size));
  const std::uint64_t curve_stride = std::max<std::uint64_t>(1, cfg.n_iters / 20);

  for (std::uint64_t n = 0; n < cfg.n_iters; ++n) {
    for (auto& i : idx) i = static_cast<std::size_t>(data_rng.next_below(train.size()));

    params.unflatten(state.theta);
    TapeNet net;
    const ad::NodeId loss = record_batch_loss(net, params, train, idx);
    const double loss_val = net.tape.value(loss)[0];
    if (!std::isfinite(loss_val)) throw DivergenceError("threelfn_pretrain: non-finite loss", n);
    net.tape.backward(loss);

    Vec grad;
    grad.reserve(state.theta.size());
    for (ad::NodeId id : {net.w0, net.w1, net.w2, net.w3, net.b0, net.b1, net.b2}) {
      const Vec& g = net.tape.grad(id);
      grad.insert(grad.end(), g.begin(), g.end());
    }
    axpy(grad, 2.0 * cfg.lambda_r, state.theta);

    for (auto& x : noise) x = noise_rng.next_gaussian();
    state = sghmc_step(state, grad, scfg, noise, n);

    if ((n + 1) % curve_stride == 0 || n + 1 == cfg.n_iters) {
      params.unflatten(state.theta);
      res.curve.push_back({n + 1, dataset_mse(train, predict), dataset_mse(val, predict)});
    }
  }

  params.unflatten(state.theta);
  res.train_mse_final = dataset_mse(train, predict);
  res.val_mse_final = dataset_mse(val, predict);
  res.W0_fixed = params.W0;
  res.W2_fixed = params.W3;
  res.trained = std::move(params);
  return res;
}

TlfnTrainResult tlfn_train(TLFNParams init, const Dataset& train, const Dataset& val,
                           const TlfnTrainConfig& cfg) {
  init.validate();
  TlfnTrainResult res;
  res.params = std::move(init);
  TLFNParams& params = res.params;

  auto predict = [&params](const Vec& z) { return tlfn_forward(params, z); };
  res.train_mse_init = dataset_mse(train, predict);
  res.val_mse_init = dataset_mse(val, predict);

  SamplerConfig scfg;
  scfg.eta = cfg.eta;
  scfg.gamma = cfg.gamma;
  scfg.beta = cfg.beta;
  scfg.seed = cfg.seed;

  RngStream data_rng = make_stream(cfg.seed, 1, Substream::kData);
  RngStream noise_rng = make_stream(cfg.seed, 1, Substream::kNoise);

  KineticState state;
  state.theta = params.flatten_trainable();
  state.v.assign(state.theta.size(), 0.0);

  Vec noise(state.theta.size());
  const std::uint64_t curve_stride = std::max<std::uint64_t>(1, cfg.n_iters / 20);

  for (std::uint64_t n = 0; n < cfg.n_iters; ++n) {
    params.unflatten_trainable(state.theta);
    Vec grad(state.theta.size(), 0.0);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Sample& s = train[static_cast<std::size_t>(data_rng.next_below(train.size()))];
      // Average G over the batch; the 2*lambda_r*theta part is batch-free.
      Vec h = tlfn_grad(params, s.y, s.z, 0.0);
      axpy(grad, 1.0 / cfg.batch_size, h);
    }
    axpy(grad, 2.0 * cfg.lambda_r, state.theta);

    for (auto& x : noise) x = noise_rng.next_gaussian();
    state = sghmc_step(state, grad, scfg, noise, n);

    if ((n + 1) % curve_stride == 0 || n + 1 == cfg.n_iters) {
      params.unflatten_trainable(state.theta);
      res.curve.push_back({n + 1, dataset_mse(train, predict), dataset_mse(val, predict)});
    }
  }

  params.unflatten_trainable(state.theta);
  res.train_mse_final = dataset_mse(train, predict);
  res.val_mse_final = dataset_mse(val, predict);
  return res;
}

std::string tlfn_snapshot(const TLFNParams& p) {
  nlohmann::json j;
  j["format"] = "tlfn-v1";
  j["shape"] = {{"d1", p.d1()}, {"d2", p.d2()}, {"m1", p.m1()}, {"m2", p.m2()}};
  j["clip_c"] = p.clip_c;
  j["W0"] = p.W0.a;
  j["W2"] = p.W2.a;
  j["trainable"] = p.flatten_trainable();
  return j.dump(2);
}

TLFNParams tlfn_from_snapshot(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (j.value("format", "") != "tlfn-v1")
    throw std::invalid_argument("tlfn_from_snapshot: unexpected format");
  const std::size_t d1 = j["shape"]["d1"], d2 = j["shape"]["d2"];
  const std::size_t m1 = j["shape"]["m1"], m2 = j["shape"]["m2"];
  TLFNParams p;
  p.clip_c = j["clip_c"].get<double>();
  p.W0 = Mat(d1, m1);
  p.W0.a = j["W0"].get<Vec>();
  p.W2 = Mat(m2, d2);
  p.W2.a = j["W2"].get<Vec>();
  p.W1 = Mat(d2, d1);
  p.b0.assign(d1, 0.0);
  p.b1.assign(d2, 0.0);
  p.unflatten_trainable(j["trainable"].get<Vec>());
  p.validate();
  return p;
}

std::string threelfn_snapshot(const ThreeLFNParams& p) {
  nlohmann::json j;
  j["format"] = "threelfn-v1";
  j["shape"] = {{"d1", p.W0.rows}, {"d2", p.W1.rows}, {"d3", p.W2.rows},
                {"m1", p.W0.cols}, {"m2", p.W3.rows}};
  j["theta"] = p.flatten();
  return j.dump(2);
}

ThreeLFNParams threelfn_from_snapshot(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (j.value("format", "") != "threelfn-v1")
    throw std::invalid_argument("threelfn_from_snapshot: unexpected format");
  const std::size_t d1 = j["shape"]["d1"], d2 = j["shape"]["d2"], d3 = j["shape"]["d3"];
  const std::size_t m1 = j["shape"]["m1"], m2 = j["shape"]["m2"];
  ThreeLFNParams p;
  p.W0 = Mat(d1, m1);
  p.W1 = Mat(d2, d1);
  p.W2 = Mat(d3, d2);
  p.W3 = Mat(m2, d3);
  p.b0.assign(d1, 0.0);
  p.b1.assign(d2, 0.0);
  p.b2.assign(d3, 0.0);
  p.unflatten(j["theta"].get<Vec>());
  return p;
}

}  // namespace sgmcmc
