// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "tableprog/tensor.hpp"

namespace tqp::ad {

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  MatMul,    // [m,k]x[k,n] -> [m,n]
  VecMat,    // [k]x[k,n]   -> [n]
  MatVec,    // [m,k]x[k]   -> [m]
  Outer,     // [m]x[n]     -> [m,n]
  Sigmoid,
  Tanh,
  Relu,
  Log,
  Exp,
  Softmax,   // last axis
  SumAll,
  SumAxis,
  Concat,    // rank-1 inputs
  Slice,     // rank-1 contiguous range
  GatherRows,
  At,        // single element -> scalar
  Clamp,
  Minimum,
  Maximum,
  StopGrad,
  Reshape,
  CmpMask,   // indicator vs constant; constant in the graph
};

enum class CmpKind : uint8_t { Gt, Lt, Ge, Le, Eq };

struct Node {
  Tensor value;
  Tensor grad;  // allocated during backward
  Op op = Op::Leaf;
  std::vector<Node*> parents;
  std::vector<int64_t> iaux;  // op-specific: indices, axis, slice range
  double daux0 = 0.0, daux1 = 0.0;
  bool requires_grad = false;
  bool reached = false;  // scratch flag used by backward
};

// One computation tape. Values are computed eagerly at node creation and a
// backward pass walks the tape in reverse; creation order is a topological
// order by construction, so every node is visited exactly once.
//
// Not thread safe; build independent graphs for concurrent work.
class Graph {
 public:
  Node* leaf(Tensor v, bool requires_grad = false);
  Node* constant(Tensor v) { return leaf(std::move(v), false); }
  Node* scalar(double x) { return constant(Tensor::scalar(x)); }

  Node* add(Node* a, Node* b);
  Node* sub(Node* a, Node* b);
  Node* mul(Node* a, Node* b);
  Node* matmul(Node* a, Node* b);
  Node* vecmat(Node* v, Node* m);
  Node* matvec(Node* m, Node* v);
  Node* outer(Node* a, Node* b);
  Node* sigmoid(Node* a);
  Node* tanh(Node* a);
  Node* relu(Node* a);
  Node* log(Node* a);
  Node* exp(Node* a);
  Node* softmax(Node* a);
  Node* sum_all(Node* a);
  Node* sum_axis(Node* a, int axis);
  Node* concat(std::span<Node* const> parts);
  Node* slice(Node* a, int64_t from, int64_t len);
  Node* gather_rows(Node* m, std::vector<int64_t> ids);
  Node* at(Node* a, int64_t index);
  Node* clamp(Node* a, double lo, double hi);
  Node* minimum(Node* a, Node* b);
  Node* maximum(Node* a, Node* b);
  Node* stop_gradient(Node* a);
  Node* reshape(Node* a, std::vector<int64_t> shape);
  Node* cmp_mask(Node* a, CmpKind kind, double c);

  // convenience
  Node* scale(Node* a, double c) { return mul(a, scalar(c)); }
  Node* neg(Node* a) { return scale(a, -1.0); }

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
  // requires_grad node that feeds the loss; other nodes keep zero grads.
  // loss must be scalar-shaped.
  void backward(Node* loss);

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  Node* push(Op op, Tensor value, std::vector<Node*> parents);
  std::deque<Node> nodes_;
};

}  // namespace tqp::ad
