#include "sgmcmc/autodiff.hpp"

#include <cmath>

namespace sgmcmc::ad {

NodeId Tape::push(Node n) {
  if (backward_done_) throw std::logic_error("Tape: cannot record after backward");
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_same_size(NodeId a, NodeId b) const {
  if (nodes_.at(a).val.size() != nodes_.at(b).val.size())
    throw std::invalid_argument("Tape: operand size mismatch");
}

NodeId Tape::input(Vec v) { return push({Op::kInput, 0, 0, 0.0, std::move(v), {}}); }

NodeId Tape::constant(Vec v) { return push({Op::kConstant, 0, 0, 0.0, std::move(v), {}}); }

NodeId Tape::add(NodeId a, NodeId b) {
  check_same_size(a, b);
  Vec v = nodes_[a].val;
  const Vec& w = nodes_[b].val;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  return push({Op::kAdd, a, b, 0.0, std::move(v), {}});
}

NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_size(a, b);
  Vec v = nodes_[a].val;
  const Vec& w = nodes_[b].val;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= w[i];
  return push({Op::kSub, a, b, 0.0, std::move(v), {}});
}

NodeId Tape::mul(NodeId a, NodeId b) {
  check_same_size(a, b);
  Vec v = nodes_[a].val;
  const Vec& w = nodes_[b].val;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= w[i];
  return push({Op::kMul, a, b, 0.0, std::move(v), {}});
}

NodeId Tape::matvec(NodeId m, NodeId x, std::size_t rows, std::size_t cols) {
  const Vec& mv = nodes_.at(m).val;
  const Vec& xv = nodes_.at(x).val;
  if (mv.size() != rows * cols || xv.size() != cols)
    throw std::invalid_argument("Tape: matvec size mismatch");
  Vec y(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* row = mv.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * xv[j];
    y[i] = s;
  }
  return push({Op::kMatVec, m, x, static_cast<double>(rows), std::move(y), {}});
}

NodeId Tape::dot(NodeId a, NodeId b) {
  check_same_size(a, b);
  const Vec& v = nodes_[a].val;
  const Vec& w = nodes_[b].val;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
  return push({Op::kDot, a, b, 0.0, Vec{s}, {}});
}

NodeId Tape::tanh_op(NodeId a) {
  Vec v = nodes_.at(a).val;
  for (auto& x : v) x = std::tanh(x);
  return push({Op::kTanh, a, 0, 0.0, std::move(v), {}});
}

NodeId Tape::sigmoid(NodeId a) {
  Vec v = nodes_.at(a).val;
  for (auto& x : v) x = 1.0 / (1.0 + std::exp(-x));
  return push({Op::kSigmoid, a, 0, 0.0, std::move(v), {}});
}

NodeId Tape::relu(NodeId a) {
  Vec v = nodes_.at(a).val;
  for (auto& x : v) x = x > 0.0 ? x : 0.0;
  return push({Op::kRelu, a, 0, 0.0, std::move(v), {}});
}

NodeId Tape::square(NodeId a) {
  Vec v = nodes_.at(a).val;
  for (auto& x : v) x = x * x;
  return push({Op::kSquare, a, 0, 0.0, std::move(v), {}});
}

NodeId Tape::sum(NodeId a) {
  const Vec& v = nodes_.at(a).val;
  double s = 0.0;
  for (double x : v) s += x;
  return push({Op::kSum, a, 0, 0.0, Vec{s}, {}});
}

NodeId Tape::scale(NodeId a, double c) {
  Vec v = nodes_.at(a).val;
  for (auto& x : v) x *= c;
  return push({Op::kScale, a, 0, c, std::move(v), {}});
}

NodeId Tape::max_const(NodeId a, double c) {
  Vec v = nodes_.at(a).val;
  for (auto& x : v) x = x > c ? x : c;
  return push({Op::kMaxConst, a, 0, c, std::move(v), {}});
}

NodeId Tape::concat(NodeId a, NodeId b) {
  Vec v = nodes_.at(a).val;
  const Vec& w = nodes_.at(b).val;
  v.insert(v.end(), w.begin(), w.end());
  return push({Op::kConcat, a, b, 0.0, std::move(v), {}});
}

const Vec& Tape::grad(NodeId id) const {
  if (!backward_done_) throw std::logic_error("Tape: grad queried before backward");
  return nodes_.at(id).grad;
}

void Tape::backward(NodeId root) {
  if (backward_done_) throw std::logic_error("Tape: backward already run");
  if (nodes_.at(root).val.size() != 1)
    throw std::invalid_argument("Tape: backward requires a scalar root");

  for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
  nodes_[root].grad[0] = 1.0;

  for (NodeId id = root + 1; id-- > 0;) {
    Node& n = nodes_[id];
    const Vec& g = n.grad;
    switch (n.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kAdd: {
        Vec& ga = nodes_[n.a].grad;
        Vec& gb = nodes_[n.b].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        Vec& ga = nodes_[n.a].grad;
        Vec& gb = nodes_[n.b].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        Vec& ga = nodes_[n.a].grad;
        Vec& gb = nodes_[n.b].grad;
        const Vec& va = nodes_[n.a].val;
        const Vec& vb = nodes_[n.b].val;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * vb[i];
          gb[i] += g[i] * va[i];
        }
        break;
      }
      case Op::kMatVec: {
        const std::size_t rows = static_cast<std::size_t>(n.aux);
        const std::size_t cols = nodes_[n.b].val.size();
        Vec& gm = nodes_[n.a].grad;
        Vec& gx = nodes_[n.b].grad;
        const Vec& mv = nodes_[n.a].val;
        const Vec& xv = nodes_[n.b].val;
        for (std::size_t i = 0; i < rows; ++i) {
          const double gi = g[i];
          double* gm_row = gm.data() + i * cols;
          const double* m_row = mv.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) {
            gm_row[j] += gi * xv[j];
            gx[j] += gi * m_row[j];
          }
        }
        break;
      }
      case Op::kDot: {
        Vec& ga = nodes_[n.a].grad;
        Vec& gb = nodes_[n.b].grad;
        const Vec& va = nodes_[n.a].val;
        const Vec& vb = nodes_[n.b].val;
        const double gs = g[0];
        for (std::size_t i = 0; i < va.size(); ++i) {
          ga[i] += gs * vb[i];
          gb[i] += gs * va[i];
        }
        break;
      }
      case Op::kTanh: {
        Vec& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
        break;
      }
      case Op::kSigmoid: {
        Vec& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
        break;
      }
      case Op::kRelu: {
        Vec& ga = nodes_[n.a].grad;
        const Vec& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += va[i] > 0.0 ? g[i] : 0.0;
        break;
      }
      case Op::kSquare: {
        Vec& ga = nodes_[n.a].grad;
        const Vec& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * va[i];
        break;
      }
      case Op::kSum: {
        Vec& ga = nodes_[n.a].grad;
        const double gs = g[0];
        for (auto& x : ga) x += gs;
        break;
      }
      case Op::kScale: {
        Vec& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux;
        break;
      }
      case Op::kMaxConst: {
        Vec& ga = nodes_[n.a].grad;
        const Vec& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += va[i] > n.aux ? g[i] : 0.0;
        break;
      }
      case Op::kConcat: {
        Vec& ga = nodes_[n.a].grad;
        Vec& gb = nodes_[n.b].grad;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
        break;
      }
    }
  }
  backward_done_ = true;
}

}  // namespace sgmcmc::ad
