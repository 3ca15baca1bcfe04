#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sgmcmc/linalg.hpp"

namespace sgmcmc::ad {

using NodeId = std::uint32_t;

// Append-only reverse-mode tape over vector-valued nodes (64-bit dense
// values, no broadcasting beyond matrix-vector). Values are computed eagerly
// as nodes are recorded; backward replays the tape once in reverse, seeding
// the scalar root with 1 and accumulating gradients additively.
//
// Derivative conventions at kinks: relu'(0) = 0 and max_const'(v) = 0 at
// v == c. Piecewise-constant factors (e.g. a sign computed from a forward
// value and folded into a scale) contribute zero derivative by construction.
class Tape {
 public:
  // Leaf with gradient tracking.
  NodeId input(Vec v);
  // Leaf without gradient interest (still accumulated, never read).
  NodeId constant(Vec v);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  // y = M x with M a node holding rows*cols entries row-major.
  NodeId matvec(NodeId m, NodeId x, std::size_t rows, std::size_t cols);
  NodeId dot(NodeId a, NodeId b);  // size-1 result
  NodeId tanh_op(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  NodeId square(NodeId a);
  NodeId sum(NodeId a);  // size-1 result
  NodeId scale(NodeId a, double c);
  NodeId max_const(NodeId a, double c);
  NodeId concat(NodeId a, NodeId b);

  const Vec& value(NodeId id) const { return nodes_.at(id).val; }
  const Vec& grad(NodeId id) const;

  // Reverse pass from a scalar root. One backward per tape.
  void backward(NodeId root);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kInput,
    kConstant,
    kAdd,
    kSub,
    kMul,
    kMatVec,
    kDot,
    kTanh,
    kSigmoid,
    kRelu,
    kSquare,
    kSum,
    kScale,
    kMaxConst,
    kConcat,
  };

  struct Node {
    Op op;
    NodeId a = 0;
    NodeId b = 0;
    double aux = 0.0;  // scale constant, max threshold, or matvec rows
    Vec val;
    Vec grad;
  };

  NodeId push(Node n);
  void check_same_size(NodeId a, NodeId b) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace sgmcmc::ad
