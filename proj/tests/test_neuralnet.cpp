#include <cmath>

#include "doctest.h"
#include "sgmcmc/neuralnet.hpp"

using namespace sgmcmc;

namespace {

TLFNParams random_tlfn(std::size_t d1, std::size_t d2, std::size_t m1, std::size_t m2,
                       double clip_c, RngStream& rng) {
  TLFNParams p;
  p.W0 = xavier_matrix(d1, m1, rng);
  p.W2 = xavier_matrix(m2, d2, rng);
  p.W1 = xavier_matrix(d2, d1, rng);
  p.b0 = xavier_vector(d1, m1, d1, rng);
  p.b1 = xavier_vector(d2, d1, d2, rng);
  p.clip_c = clip_c;
  return p;
}

Vec random_vec(std::size_t n, RngStream& rng, double scale = 1.0) {
  Vec v(n);
  for (auto& x : v) x = (2.0 * rng.next_uniform() - 1.0) * scale;
  return v;
}

// Resamples z until every first-layer pre-activation is at least `band`
// away from the ReLU kink.
Vec kink_excluded_input(const TLFNParams& p, RngStream& rng, double band) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec z = random_vec(p.m1(), rng, 2.0);
    Vec pre = p.W0.matvec(z);
    bool ok = true;
    for (std::size_t k = 0; k < pre.size(); ++k) {
      if (std::fabs(pre[k] + clip_f(p.b0[k], p.clip_c)) < band) {
        ok = false;
        break;
      }
    }
    if (ok) return z;
  }
  throw std::runtime_error("kink_excluded_input: could not find a safe input");
}

}  // namespace

TEST_CASE("clipper f and its derivative") {
  CHECK(clip_f(0.0, 2.0) == doctest::Approx(0.0));
  CHECK(clip_f_prime(0.0, 2.0) == doctest::Approx(1.0));
  // saturation
  CHECK(std::fabs(clip_f(100.0 * 3.0, 3.0) - 3.0) <= 1e-8);
  CHECK(std::fabs(clip_f(-100.0 * 3.0, 3.0) + 3.0) <= 1e-8);
  // derivative vs central difference at v=0.7, c=2
  const double h = 1e-6;
  const double fd = (clip_f(0.7 + h, 2.0) - clip_f(0.7 - h, 2.0)) / (2.0 * h);
  CHECK(std::fabs(clip_f_prime(0.7, 2.0) - fd) <= 1e-8);
  // range
  RngStream rng(5, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = (2.0 * rng.next_uniform() - 1.0) * 1e3;
    CHECK(std::fabs(clip_f(v, 1.5)) <= 1.5);
    // 1 - tanh^2 underflows to exactly 0 deep in saturation; positivity is
    // only observable at moderate arguments.
    CHECK(clip_f_prime(v, 1.5) >= 0.0);
    CHECK(clip_f_prime(v, 1.5) <= 1.0);
    const double v_mod = (2.0 * rng.next_uniform() - 1.0) * 20.0;
    CHECK(clip_f_prime(v_mod, 1.5) > 0.0);
  }
}

TEST_CASE("tlfn_forward") {
  RngStream rng(7, 0, 0);
  SUBCASE("zero trainables collapse to 0.5 * row sums of W2") {
    TLFNParams p = random_tlfn(4, 3, 2, 2, 1.0, rng);
    p.W1 = Mat(3, 4, 0.0);
    p.b0.assign(4, 0.0);
    p.b1.assign(3, 0.0);
    const Vec out = tlfn_forward(p, {0.77, -0.3});
    for (std::size_t j = 0; j < 2; ++j) {
      double row = 0.0;
      for (std::size_t n = 0; n < 3; ++n) row += p.W2(j, n);
      CHECK(out[j] == doctest::Approx(0.5 * row).epsilon(1e-12));
    }
  }
  SUBCASE("scalar chain with f(0) = 0 kills the hidden product") {
    TLFNParams p;
    p.W0 = Mat(1, 1);
    p.W0(0, 0) = 1.0;
    p.W2 = Mat(1, 1);
    p.W2(0, 0) = 1.0;
    p.W1 = Mat(1, 1, 0.0);
    p.b0 = {0.0};
    p.b1 = {0.0};
    CHECK(tlfn_forward(p, {5.0})[0] == doctest::Approx(0.5));
  }
  SUBCASE("output bound d2 * max|W2|") {
    TLFNParams p = random_tlfn(6, 5, 3, 2, 1.0, rng);
    const double bound = static_cast<double>(p.d2()) * p.W2.max_abs();
    for (int i = 0; i < 1000; ++i) {
      const Vec out = tlfn_forward(p, random_vec(3, rng, 4.0));
      for (double o : out) CHECK(std::fabs(o) <= bound + 1e-12);
    }
  }
}

TEST_CASE("tlfn_grad") {
  RngStream rng(9, 0, 0);
  SUBCASE("zero residual and zero lambda_r give a zero gradient") {
    TLFNParams p = random_tlfn(5, 4, 2, 1, 1.0, rng);
    const Vec z = random_vec(2, rng);
    const Vec y = tlfn_forward(p, z);
    const Vec g = tlfn_grad(p, y, z, 0.0);
    for (double gi : g) CHECK(gi == doctest::Approx(0.0));
  }
  SUBCASE("zero residual leaves exactly the regularizer term") {
    TLFNParams p = random_tlfn(5, 4, 2, 1, 1.0, rng);
    const Vec z = random_vec(2, rng);
    const Vec y = tlfn_forward(p, z);
    const double lambda_r = 0.37;
    const Vec g = tlfn_grad(p, y, z, lambda_r);
    const Vec theta = p.flatten_trainable();
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(g[i] == doctest::Approx(2.0 * lambda_r * theta[i]).epsilon(1e-12));
  }
  SUBCASE("matches central finite differences away from kinks") {
    const double lambda_r = 1e-3;
    int points = 0;
    while (points < 100) {
      TLFNParams p = random_tlfn(8, 7, 3, 2, 1.0, rng);
      const Vec z = kink_excluded_input(p, rng, 1e-3);
      const Vec y = random_vec(2, rng, 2.0);
      const Vec grad = tlfn_grad(p, y, z, lambda_r);
      Vec theta = p.flatten_trainable();
      for (std::size_t i = 0; i < theta.size(); i += 7) {  // probe a spread of coordinates
        const double h = 1e-6 * std::max(1.0, std::fabs(theta[i]));
        TLFNParams up = p, dn = p;
        Vec tu = theta, td = theta;
        tu[i] += h;
        td[i] -= h;
        up.unflatten_trainable(tu);
        dn.unflatten_trainable(td);
        const double fd =
            (tlfn_loss(up, y, z, lambda_r) - tlfn_loss(dn, y, z, lambda_r)) / (2.0 * h);
        CHECK(std::fabs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::fabs(fd)));
      }
      ++points;
    }
  }
}

TEST_CASE("component bounds on G from the fixed outer weights") {
  RngStream rng(11, 0, 0);
  const std::size_t d1 = 5, d2 = 4, m1 = 2, m2 = 2;
  TLFNParams p = random_tlfn(d1, d2, m1, m2, 1.0, rng);
  const double c = p.clip_c;
  const double cW2 = p.W2.max_abs();
  const double cW0 = p.W0.max_abs();
  const double C_b0 = 2.0 * m2 * d2 * c * cW2 * (1.0 + d2 * cW2);
  const double C_b1 = 2.0 * m2 * cW2 * (1.0 + d2 * cW2);
  const double C_W1 = 2.0 * m2 * cW2 * (1.0 + d2 * cW2) * (m1 * cW0 + c);

  for (int i = 0; i < 10000; ++i) {
    Vec theta = random_vec(p.trainable_dim(), rng, 3.0);
    p.unflatten_trainable(theta);
    const Vec z = random_vec(m1, rng, 2.0);
    const Vec y = random_vec(m2, rng, 3.0);
    const double x_norm = std::sqrt(norm_sq(y) + norm_sq(z));
    const Vec g = tlfn_grad(p, y, z, 0.0);
    const std::size_t off_b0 = d1 * d2, off_b1 = off_b0 + d1;
    for (std::size_t k = 0; k < off_b0; ++k)
      CHECK(std::fabs(g[k]) <= C_W1 * (1.0 + x_norm) * (1.0 + x_norm) + 1e-9);
    for (std::size_t k = off_b0; k < off_b1; ++k)
      CHECK(std::fabs(g[k]) <= C_b0 * (1.0 + x_norm) + 1e-9);
    for (std::size_t k = off_b1; k < g.size(); ++k)
      CHECK(std::fabs(g[k]) <= C_b1 * (1.0 + x_norm) + 1e-9);
  }
}

TEST_CASE("gradients through f stay finite for huge W1 entries") {
  RngStream rng(13, 0, 0);
  TLFNParams p = random_tlfn(4, 3, 2, 1, 1.0, rng);
  for (double scale : {1e2, 1e4, 1e6}) {
    for (auto& w : p.W1.a) w = scale;
    const Vec g = tlfn_grad(p, {0.3}, {0.2, -0.4}, 1e-5);
    CHECK(all_finite(g));
  }
}

TEST_CASE("flatten round-trip is bitwise") {
  RngStream rng(15, 0, 0);
  TLFNParams p = random_tlfn(6, 5, 3, 2, 1.0, rng);
  const Vec theta = p.flatten_trainable();
  TLFNParams q = p;
  q.unflatten_trainable(theta);
  CHECK(q.W1.a == p.W1.a);
  CHECK(q.b0 == p.b0);
  CHECK(q.b1 == p.b1);
  CHECK(theta.size() == p.trainable_dim());

  ThreeLFNParams t = ThreeLFNParams::xavier(4, 5, 6, 2, 1, rng);
  const Vec flat = t.flatten();
  ThreeLFNParams t2 = t;
  t2.unflatten(flat);
  CHECK(t2.flatten() == flat);
  CHECK(flat.size() == 4 * (2 + 1) + 5 * (4 + 1) + 6 * (5 + 1 + 1));
}

TEST_CASE("xavier initialization respects the uniform bound") {
  RngStream rng(17, 0, 0);
  const Mat m = xavier_matrix(30, 20, rng);
  const double bound = std::sqrt(6.0 / (30 + 20));
  for (double x : m.a) CHECK(std::fabs(x) <= bound);
  // and actually spreads out
  CHECK(m.max_abs() > 0.5 * bound);
}

TEST_CASE("tlfn params validation") {
  RngStream rng(19, 0, 0);
  TLFNParams p = random_tlfn(3, 3, 2, 1, 1.0, rng);
  CHECK_NOTHROW(p.validate());
  p.clip_c = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.clip_c = 1.0;
  for (std::size_t i = 0; i < p.W0.cols; ++i) p.W0(1, i) = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("parameter snapshots round-trip through JSON") {
  RngStream rng(29, 0, 0);
  TLFNParams p = random_tlfn(5, 4, 2, 2, 1.3, rng);
  const TLFNParams q = tlfn_from_snapshot(tlfn_snapshot(p));
  CHECK(q.W0.a == p.W0.a);
  CHECK(q.W2.a == p.W2.a);
  CHECK(q.flatten_trainable() == p.flatten_trainable());
  CHECK(q.clip_c == p.clip_c);
  // predictions identical after the round trip
  const Vec z = random_vec(2, rng);
  CHECK(tlfn_forward(q, z) == tlfn_forward(p, z));

  ThreeLFNParams t = ThreeLFNParams::xavier(4, 5, 6, 2, 1, rng);
  const ThreeLFNParams t2 = threelfn_from_snapshot(threelfn_snapshot(t));
  CHECK(t2.flatten() == t.flatten());
  CHECK_THROWS_AS(tlfn_from_snapshot("{\"format\":\"nope\"}"), std::invalid_argument);
}

TEST_CASE("threelfn pretraining reduces the training error") {
  PretrainConfig cfg;
  cfg.d1 = cfg.d2 = cfg.d3 = 8;
  cfg.n_samples = 600;
  cfg.n_iters = 400;
  cfg.batch_size = 16;
  cfg.seed = 23;
  const PretrainResult res = threelfn_pretrain(cfg);
  CHECK(res.train_mse_final < res.train_mse_init);
  CHECK(res.W0_fixed.rows == 8);
  CHECK(res.W0_fixed.cols == 2);
  CHECK(res.W2_fixed.rows == 1);
  CHECK(res.W2_fixed.cols == 8);
  CHECK(!res.curve.empty());
}
