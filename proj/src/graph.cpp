// SPDX-License-Identifier: Apache-2.0
#include "tableprog/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace tqp::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " +
                              a.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " +
                              a.shape_str() + " vs " + b.shape_str());
}

bool scalar_like(const Tensor& t) { return t.numel() == 1; }

// elementwise with scalar broadcast on either side
void check_elementwise(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b) && !scalar_like(a) && !scalar_like(b))
    shape_error(op, a, b);
}

const Tensor& wider(const Tensor& a, const Tensor& b) {
  return scalar_like(a) && !scalar_like(b) ? b : a;
}

}  // namespace

Node* Graph::push(Op op, Tensor value, std::vector<Node*> parents) {
  nodes_.emplace_back();
  Node& n = nodes_.back();
  n.op = op;
  n.value = std::move(value);
  n.parents = std::move(parents);
  for (Node* p : n.parents)
    if (p->requires_grad) n.requires_grad = true;
  if (op == Op::StopGrad || op == Op::CmpMask) n.requires_grad = false;
  return &n;
}

Node* Graph::leaf(Tensor v, bool requires_grad) {
  Node* n = push(Op::Leaf, std::move(v), {});
  n->requires_grad = requires_grad;
  return n;
}

Node* Graph::add(Node* a, Node* b) {
  check_elementwise("add", a->value, b->value);
  Tensor out = wider(a->value, b->value);
  const bool sa = scalar_like(a->value), sb = scalar_like(b->value);
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a->value[sa ? 0 : i] + b->value[sb ? 0 : i];
  return push(Op::Add, std::move(out), {a, b});
}

Node* Graph::sub(Node* a, Node* b) {
  check_elementwise("sub", a->value, b->value);
  Tensor out = wider(a->value, b->value);
  const bool sa = scalar_like(a->value), sb = scalar_like(b->value);
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a->value[sa ? 0 : i] - b->value[sb ? 0 : i];
  return push(Op::Sub, std::move(out), {a, b});
}

Node* Graph::mul(Node* a, Node* b) {
  check_elementwise("mul", a->value, b->value);
  Tensor out = wider(a->value, b->value);
  const bool sa = scalar_like(a->value), sb = scalar_like(b->value);
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a->value[sa ? 0 : i] * b->value[sb ? 0 : i];
  return push(Op::Mul, std::move(out), {a, b});
}

Node* Graph::matmul(Node* a, Node* b) {
  const Tensor& A = a->value;
  const Tensor& B = b->value;
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
    shape_error("matmul", A, B);
  const int64_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t l = 0; l < k; ++l) {
      const double av = A.at(i, l);
      if (av == 0.0) continue;
      for (int64_t j = 0; j < n; ++j) out.at(i, j) += av * B.at(l, j);
    }
  return push(Op::MatMul, std::move(out), {a, b});
}

Node* Graph::vecmat(Node* v, Node* m) {
  const Tensor& x = v->value;
  const Tensor& M = m->value;
  if (x.rank() != 1 || M.rank() != 2 || x.dim(0) != M.rows())
    shape_error("vecmat", x, M);
  const int64_t k = M.rows(), n = M.cols();
  Tensor out({n});
  for (int64_t l = 0; l < k; ++l) {
    const double xv = x[l];
    if (xv == 0.0) continue;
    for (int64_t j = 0; j < n; ++j) out[j] += xv * M.at(l, j);
  }
  return push(Op::VecMat, std::move(out), {v, m});
}

Node* Graph::matvec(Node* m, Node* v) {
  const Tensor& M = m->value;
  const Tensor& x = v->value;
  if (M.rank() != 2 || x.rank() != 1 || M.cols() != x.dim(0))
    shape_error("matvec", M, x);
  const int64_t rows = M.rows(), k = M.cols();
  Tensor out({rows});
  for (int64_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int64_t l = 0; l < k; ++l) s += M.at(i, l) * x[l];
    out[i] = s;
  }
  return push(Op::MatVec, std::move(out), {m, v});
}

Node* Graph::outer(Node* a, Node* b) {
  const Tensor& x = a->value;
  const Tensor& y = b->value;
  if (x.rank() != 1 || y.rank() != 1) shape_error("outer", x, y);
  const int64_t m = x.dim(0), n = y.dim(0);
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out.at(i, j) = x[i] * y[j];
  return push(Op::Outer, std::move(out), {a, b});
}

Node* Graph::sigmoid(Node* a) {
  Tensor out = a->value;
  for (double& e : out.v) e = 1.0 / (1.0 + std::exp(-e));
  return push(Op::Sigmoid, std::move(out), {a});
}

Node* Graph::tanh(Node* a) {
  Tensor out = a->value;
  for (double& e : out.v) e = std::tanh(e);
  return push(Op::Tanh, std::move(out), {a});
}

Node* Graph::relu(Node* a) {
  Tensor out = a->value;
  for (double& e : out.v) e = e > 0.0 ? e : 0.0;
  return push(Op::Relu, std::move(out), {a});
}

Node* Graph::log(Node* a) {
  Tensor out = a->value;
  for (double& e : out.v) e = std::log(e);
  return push(Op::Log, std::move(out), {a});
}

Node* Graph::exp(Node* a) {
  Tensor out = a->value;
  for (double& e : out.v) e = std::exp(e);
  return push(Op::Exp, std::move(out), {a});
}

Node* Graph::softmax(Node* a) {
  const Tensor& x = a->value;
  if (x.rank() != 1 && x.rank() != 2) shape_error("softmax", x);
  const int64_t rows = x.rank() == 2 ? x.rows() : 1;
  const int64_t n = x.rank() == 2 ? x.cols() : x.dim(0);
  Tensor out = x;
  for (int64_t r = 0; r < rows; ++r) {
    double* row = out.v.data() + r * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int64_t j = 0; j < n; ++j) row[j] /= sum;
  }
  return push(Op::Softmax, std::move(out), {a});
}

Node* Graph::sum_all(Node* a) {
  double s = 0.0;
  for (double e : a->value.v) s += e;
  return push(Op::SumAll, Tensor::scalar(s), {a});
}

Node* Graph::sum_axis(Node* a, int axis) {
  const Tensor& x = a->value;
  if (x.rank() != 2 || (axis != 0 && axis != 1)) shape_error("sum_axis", x);
  const int64_t m = x.rows(), n = x.cols();
  Tensor out({axis == 0 ? n : m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += x.at(i, j);
  Node* node = push(Op::SumAxis, std::move(out), {a});
  node->iaux = {axis};
  return node;
}

Node* Graph::concat(std::span<Node* const> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  int64_t total = 0;
  for (Node* p : parts) {
    if (p->value.rank() != 1) shape_error("concat", p->value);
    total += p->value.numel();
  }
  Tensor out({total});
  int64_t off = 0;
  for (Node* p : parts) {
    for (int64_t i = 0; i < p->value.numel(); ++i) out[off + i] = p->value[i];
    off += p->value.numel();
  }
  return push(Op::Concat, std::move(out),
              std::vector<Node*>(parts.begin(), parts.end()));
}

Node* Graph::slice(Node* a, int64_t from, int64_t len) {
  const Tensor& x = a->value;
  if (x.rank() != 1 || from < 0 || len < 0 || from + len > x.numel())
    shape_error("slice", x);
  Tensor out({len});
  for (int64_t i = 0; i < len; ++i) out[i] = x[from + i];
  Node* node = push(Op::Slice, std::move(out), {a});
  node->iaux = {from, len};
  return node;
}

Node* Graph::gather_rows(Node* m, std::vector<int64_t> ids) {
  const Tensor& M = m->value;
  if (M.rank() != 2) shape_error("gather_rows", M);
  for (int64_t id : ids)
    if (id < 0 || id >= M.rows())
      throw std::invalid_argument("gather_rows: index out of range");
  const int64_t n = static_cast<int64_t>(ids.size()), d = M.cols();
  Tensor out({n, d});
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < d; ++j) out.at(r, j) = M.at(ids[r], j);
  Node* node = push(Op::GatherRows, std::move(out), {m});
  node->iaux = std::move(ids);
  return node;
}

Node* Graph::at(Node* a, int64_t index) {
  if (index < 0 || index >= a->value.numel())
    throw std::invalid_argument("at: index out of range");
  Node* node = push(Op::At, Tensor::scalar(a->value[index]), {a});
  node->iaux = {index};
  return node;
}

Node* Graph::clamp(Node* a, double lo, double hi) {
  Tensor out = a->value;
  for (double& e : out.v) e = e < lo ? lo : (e > hi ? hi : e);
  Node* node = push(Op::Clamp, std::move(out), {a});
  node->daux0 = lo;
  node->daux1 = hi;
  return node;
}

Node* Graph::minimum(Node* a, Node* b) {
  check_elementwise("minimum", a->value, b->value);
  Tensor out = wider(a->value, b->value);
  const bool sa = scalar_like(a->value), sb = scalar_like(b->value);
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double x = a->value[sa ? 0 : i], y = b->value[sb ? 0 : i];
    out[i] = x <= y ? x : y;  // tie: first operand wins the gradient
  }
  return push(Op::Minimum, std::move(out), {a, b});
}

Node* Graph::maximum(Node* a, Node* b) {
  check_elementwise("maximum", a->value, b->value);
  Tensor out = wider(a->value, b->value);
  const bool sa = scalar_like(a->value), sb = scalar_like(b->value);
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double x = a->value[sa ? 0 : i], y = b->value[sb ? 0 : i];
    out[i] = x >= y ? x : y;
  }
  return push(Op::Maximum, std::move(out), {a, b});
}

Node* Graph::stop_gradient(Node* a) {
  return push(Op::StopGrad, a->value, {a});
}

Node* Graph::reshape(Node* a, std::vector<int64_t> shape) {
  if (Tensor::numel_of(shape) != a->value.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out(std::move(shape), a->value.v);
  return push(Op::Reshape, std::move(out), {a});
}

Node* Graph::cmp_mask(Node* a, CmpKind kind, double c) {
  Tensor out = a->value;
  for (double& e : out.v) {
    bool hit = false;
    switch (kind) {
      case CmpKind::Gt: hit = e > c; break;
      case CmpKind::Lt: hit = e < c; break;
      case CmpKind::Ge: hit = e >= c; break;
      case CmpKind::Le: hit = e <= c; break;
      case CmpKind::Eq: hit = e == c; break;
    }
    e = hit ? 1.0 : 0.0;
  }
  return push(Op::CmpMask, std::move(out), {a});
}

namespace {

void accumulate(Node* p, int64_t i, double g) {
  if (p->requires_grad && p->reached) p->grad[i] += g;
}

// scalar-broadcast-aware index on a parent
int64_t bidx(const Node* p, int64_t i) {
  return p->value.numel() == 1 ? 0 : i;
}

void backward_node(Node& n) {
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::Leaf:
    case Op::StopGrad:
    case Op::CmpMask:
      break;
    case Op::Add: {
      for (int64_t i = 0; i < g.numel(); ++i) {
        accumulate(n.parents[0], bidx(n.parents[0], i), g[i]);
        accumulate(n.parents[1], bidx(n.parents[1], i), g[i]);
      }
      break;
    }
    case Op::Sub: {
      for (int64_t i = 0; i < g.numel(); ++i) {
        accumulate(n.parents[0], bidx(n.parents[0], i), g[i]);
        accumulate(n.parents[1], bidx(n.parents[1], i), -g[i]);
      }
      break;
    }
    case Op::Mul: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      for (int64_t i = 0; i < g.numel(); ++i) {
        accumulate(a, bidx(a, i), g[i] * b->value[bidx(b, i)]);
        accumulate(b, bidx(b, i), g[i] * a->value[bidx(a, i)]);
      }
      break;
    }
    case Op::MatMul: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      const Tensor& A = a->value;
      const Tensor& B = b->value;
      const int64_t m = A.rows(), k = A.cols(), nn = B.cols();
      if (a->requires_grad && a->reached)
        for (int64_t i = 0; i < m; ++i)
          for (int64_t l = 0; l < k; ++l) {
            double s = 0.0;
            for (int64_t j = 0; j < nn; ++j) s += g.at(i, j) * B.at(l, j);
            a->grad.at(i, l) += s;
          }
      if (b->requires_grad && b->reached)
        for (int64_t l = 0; l < k; ++l)
          for (int64_t i = 0; i < m; ++i) {
            const double av = A.at(i, l);
            if (av == 0.0) continue;
            for (int64_t j = 0; j < nn; ++j)
              b->grad.at(l, j) += av * g.at(i, j);
          }
      break;
    }
    case Op::VecMat: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      const Tensor& x = a->value;
      const Tensor& M = b->value;
      const int64_t k = M.rows(), nn = M.cols();
      if (a->requires_grad && a->reached)
        for (int64_t l = 0; l < k; ++l) {
          double s = 0.0;
          for (int64_t j = 0; j < nn; ++j) s += g[j] * M.at(l, j);
          a->grad[l] += s;
        }
      if (b->requires_grad && b->reached)
        for (int64_t l = 0; l < k; ++l) {
          const double xv = x[l];
          if (xv == 0.0) continue;
          for (int64_t j = 0; j < nn; ++j) b->grad.at(l, j) += xv * g[j];
        }
      break;
    }
    case Op::MatVec: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      const Tensor& M = a->value;
      const Tensor& x = b->value;
      const int64_t m = M.rows(), k = M.cols();
      if (a->requires_grad && a->reached)
        for (int64_t i = 0; i < m; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          for (int64_t l = 0; l < k; ++l) a->grad.at(i, l) += gi * x[l];
        }
      if (b->requires_grad && b->reached)
        for (int64_t l = 0; l < k; ++l) {
          double s = 0.0;
          for (int64_t i = 0; i < m; ++i) s += g[i] * M.at(i, l);
          b->grad[l] += s;
        }
      break;
    }
    case Op::Outer: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      const int64_t m = a->value.dim(0), nn = b->value.dim(0);
      if (a->requires_grad && a->reached)
        for (int64_t i = 0; i < m; ++i) {
          double s = 0.0;
          for (int64_t j = 0; j < nn; ++j) s += g.at(i, j) * b->value[j];
          a->grad[i] += s;
        }
      if (b->requires_grad && b->reached)
        for (int64_t j = 0; j < nn; ++j) {
          double s = 0.0;
          for (int64_t i = 0; i < m; ++i) s += g.at(i, j) * a->value[i];
          b->grad[j] += s;
        }
      break;
    }
    case Op::Sigmoid: {
      Node* a = n.parents[0];
      for (int64_t i = 0; i < g.numel(); ++i) {
        const double y = n.value[i];
        accumulate(a, i, g[i] * y * (1.0 - y));
      }
      break;
    }
    case Op::Tanh: {
      Node* a = n.parents[0];
      for (int64_t i = 0; i < g.numel(); ++i) {
        const double y = n.value[i];
        accumulate(a, i, g[i] * (1.0 - y * y));
      }
      break;
    }
    case Op::Relu: {
      // zero gradient at exactly 0 by convention
      Node* a = n.parents[0];
      for (int64_t i = 0; i < g.numel(); ++i)
        if (a->value[i] > 0.0) accumulate(a, i, g[i]);
      break;
    }
    case Op::Log: {
      Node* a = n.parents[0];
      for (int64_t i = 0; i < g.numel(); ++i)
        accumulate(a, i, g[i] / a->value[i]);
      break;
    }
    case Op::Exp: {
      Node* a = n.parents[0];
      for (int64_t i = 0; i < g.numel(); ++i)
        accumulate(a, i, g[i] * n.value[i]);
      break;
    }
    case Op::Softmax: {
      Node* a = n.parents[0];
      if (!(a->requires_grad && a->reached)) break;
      const Tensor& y = n.value;
      const int64_t rows = y.rank() == 2 ? y.rows() : 1;
      const int64_t nn = y.rank() == 2 ? y.cols() : y.dim(0);
      for (int64_t r = 0; r < rows; ++r) {
        const double* yr = y.v.data() + r * nn;
        const double* gr = g.v.data() + r * nn;
        double dot = 0.0;
        for (int64_t j = 0; j < nn; ++j) dot += gr[j] * yr[j];
        for (int64_t j = 0; j < nn; ++j)
          a->grad[r * nn + j] += yr[j] * (gr[j] - dot);
      }
      break;
    }
    case Op::SumAll: {
      Node* a = n.parents[0];
      if (!(a->requires_grad && a->reached)) break;
      for (int64_t i = 0; i < a->value.numel(); ++i) a->grad[i] += g[0];
      break;
    }
    case Op::SumAxis: {
      Node* a = n.parents[0];
      if (!(a->requires_grad && a->reached)) break;
      const int axis = static_cast<int>(n.iaux[0]);
      const int64_t m = a->value.rows(), nn = a->value.cols();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < nn; ++j)
          a->grad.at(i, j) += g[axis == 0 ? j : i];
      break;
    }
    case Op::Concat: {
      int64_t off = 0;
      for (Node* p : n.parents) {
        const int64_t len = p->value.numel();
        if (p->requires_grad && p->reached)
          for (int64_t i = 0; i < len; ++i) p->grad[i] += g[off + i];
        off += len;
      }
      break;
    }
    case Op::Slice: {
      Node* a = n.parents[0];
      if (!(a->requires_grad && a->reached)) break;
      const int64_t from = n.iaux[0], len = n.iaux[1];
      for (int64_t i = 0; i < len; ++i) a->grad[from + i] += g[i];
      break;
    }
    case Op::GatherRows: {
      Node* a = n.parents[0];
      if (!(a->requires_grad && a->reached)) break;
      const int64_t d = a->value.cols();
      for (size_t r = 0; r < n.iaux.size(); ++r)
        for (int64_t j = 0; j < d; ++j)
          a->grad.at(n.iaux[r], j) += g.at(static_cast<int64_t>(r), j);
      break;
    }
    case Op::At: {
      accumulate(n.parents[0], n.iaux[0], g[0]);
      break;
    }
    case Op::Clamp: {
      Node* a = n.parents[0];
      for (int64_t i = 0; i < g.numel(); ++i) {
        const double x = a->value[i];
        if (x >= n.daux0 && x <= n.daux1) accumulate(a, i, g[i]);
      }
      break;
    }
    case Op::Minimum: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      for (int64_t i = 0; i < g.numel(); ++i) {
        if (a->value[bidx(a, i)] <= b->value[bidx(b, i)])
          accumulate(a, bidx(a, i), g[i]);
        else
          accumulate(b, bidx(b, i), g[i]);
      }
      break;
    }
    case Op::Maximum: {
      Node* a = n.parents[0];
      Node* b = n.parents[1];
      for (int64_t i = 0; i < g.numel(); ++i) {
        if (a->value[bidx(a, i)] >= b->value[bidx(b, i)])
          accumulate(a, bidx(a, i), g[i]);
        else
          accumulate(b, bidx(b, i), g[i]);
      }
      break;
    }
    case Op::Reshape: {
      Node* a = n.parents[0];
      if (!(a->requires_grad && a->reached)) break;
      for (int64_t i = 0; i < g.numel(); ++i) a->grad[i] += g[i];
      break;
    }
  }
}

}  // namespace

void Graph::backward(Node* loss) {
  if (loss->value.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar-shaped");

  // mark the ancestor closure of the loss
  for (Node& n : nodes_) n.reached = false;
  std::vector<Node*> stack{loss};
  loss->reached = true;
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    for (Node* p : n->parents)
      if (!p->reached) {
        p->reached = true;
        stack.push_back(p);
      }
  }

  for (Node& n : nodes_)
    if (n.requires_grad) {
      n.grad = Tensor::zeros(n.value.shape);
    } else if (n.grad.numel() != 0) {
      n.grad.fill(0.0);
    }

  if (!loss->requires_grad) return;  // constant loss: all gradients zero
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (it->reached && it->requires_grad) backward_node(*it);
}

}  // namespace tqp::ad
