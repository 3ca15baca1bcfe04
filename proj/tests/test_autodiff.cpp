#include <cmath>

#include "doctest.h"
#include "sgmcmc/autodiff.hpp"
#include "sgmcmc/rng.hpp"

using namespace sgmcmc;
using sgmcmc::ad::Tape;

TEST_CASE("scalar derivatives") {
  SUBCASE("d/dx x^2 at 3 is 6") {
    Tape t;
    const auto x = t.input({3.0});
    const auto y = t.square(x);
    t.backward(y);
    CHECK(t.grad(x)[0] == doctest::Approx(6.0));
  }
  SUBCASE("d/dx tanh(x) at 0 is 1") {
    Tape t;
    const auto x = t.input({0.0});
    const auto y = t.tanh_op(x);
    t.backward(y);
    CHECK(t.grad(x)[0] == doctest::Approx(1.0));
  }
  SUBCASE("relu derivative at 0 is 0") {
    Tape t;
    const auto x = t.input({0.0});
    const auto y = t.relu(x);
    t.backward(y);
    CHECK(t.grad(x)[0] == doctest::Approx(0.0));
  }
  SUBCASE("max_const derivative switches at the threshold") {
    Tape t;
    const auto x = t.input({2.0, -1.0});
    const auto y = t.sum(t.max_const(x, 0.5));
    t.backward(y);
    CHECK(t.grad(x)[0] == doctest::Approx(1.0));
    CHECK(t.grad(x)[1] == doctest::Approx(0.0));
  }
}

namespace {

// Three-layer composite: w2 . tanh(M h + b), h = sigmoid(W x + c), scalarized
// with a square and sum; avoids relu kinks entirely.
double composite_and_grad(const Vec& params, Vec* grad_out) {
  Tape t;
  const auto W = t.input(Vec(params.begin(), params.begin() + 6));       // 2x3
  const auto c = t.input(Vec(params.begin() + 6, params.begin() + 8));   // 2
  const auto M = t.input(Vec(params.begin() + 8, params.begin() + 12));  // 2x2
  const auto b = t.input(Vec(params.begin() + 12, params.begin() + 14)); // 2
  const auto w2 = t.input(Vec(params.begin() + 14, params.begin() + 16));
  const auto x = t.constant({0.3, -0.7, 1.1});

  const auto h = t.sigmoid(t.add(t.matvec(W, x, 2, 3), c));
  const auto z = t.tanh_op(t.add(t.matvec(M, h, 2, 2), b));
  const auto out = t.square(t.dot(w2, z));
  t.backward(out);
  if (grad_out) {
    grad_out->clear();
    for (auto id : {W, c, M, b, w2}) {
      const Vec& g = t.grad(id);
      grad_out->insert(grad_out->end(), g.begin(), g.end());
    }
  }
  return t.value(out)[0];
}

}  // namespace

TEST_CASE("composite gradient matches central finite differences") {
  RngStream rng(17, 0, 0);
  for (int rep = 0; rep < 50; ++rep) {
    Vec params(16);
    for (auto& p : params) p = 2.0 * rng.next_uniform() - 1.0;
    Vec grad;
    composite_and_grad(params, &grad);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::fabs(params[i]));
      Vec up = params, dn = params;
      up[i] += h;
      dn[i] -= h;
      const double fd = (composite_and_grad(up, nullptr) - composite_and_grad(dn, nullptr)) /
                        (2.0 * h);
      CHECK(std::fabs(grad[i] - fd) <= 1e-6 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST_CASE("linearity: grad of f+g is grad f + grad g") {
  RngStream rng(19, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    Vec v(4);
    for (auto& x : v) x = 2.0 * rng.next_uniform() - 1.0;

    auto grad_of = [&](int which) {
      Tape t;
      const auto a = t.input(v);
      const auto f = t.sum(t.square(a));
      const auto g = t.dot(a, t.constant({0.5, -1.0, 2.0, 0.25}));
      ad::NodeId root = which == 0 ? f : which == 1 ? g : t.add(f, g);
      t.backward(root);
      return t.grad(a);
    };

    const Vec gf = grad_of(0), gg = grad_of(1), gsum = grad_of(2);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(gsum[i] == doctest::Approx(gf[i] + gg[i]).epsilon(1e-14));
  }
}

TEST_CASE("determinism: identical tapes give bit-identical gradients") {
  auto run = [] {
    Tape t;
    const auto a = t.input({0.1, 0.2, 0.3});
    const auto b = t.input({-0.4, 0.5, -0.6});
    const auto out = t.sum(t.mul(t.sigmoid(a), t.tanh_op(b)));
    t.backward(out);
    return std::pair<Vec, Vec>{t.grad(a), t.grad(b)};
  };
  const auto [ga1, gb1] = run();
  const auto [ga2, gb2] = run();
  for (std::size_t i = 0; i < ga1.size(); ++i) {
    CHECK(ga1[i] == ga2[i]);
    CHECK(gb1[i] == gb2[i]);
  }
}

TEST_CASE("backward is rejected on non-scalar roots and second calls") {
  Tape t;
  const auto a = t.input({1.0, 2.0});
  const auto b = t.square(a);
  CHECK_THROWS_AS(t.backward(b), std::invalid_argument);
  const auto s = t.sum(b);
  t.backward(s);
  CHECK_THROWS_AS(t.backward(s), std::logic_error);
}

TEST_CASE("operand size mismatches are rejected") {
  Tape t;
  const auto a = t.input({1.0, 2.0});
  const auto b = t.input({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.matvec(a, b, 2, 2), std::invalid_argument);
}
