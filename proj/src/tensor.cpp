// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace apollo::ag {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

namespace {

NodePtr new_node(const Shape& shape) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(size_t(shape_numel(shape)), 0.0);
  return n;
}

bool any_rg(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts)
    if ((*t).defined() && t->requires_grad()) return true;
  return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.shape() == b.shape(), std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor Tensor::zeros(const Shape& shape) { return Tensor(new_node(shape)); }

Tensor Tensor::full(const Shape& shape, double v) {
  auto n = new_node(shape);
  std::fill(n->value.begin(), n->value.end(), v);
  return Tensor(n);
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> values) {
  check(shape_numel(shape) == int64_t(values.size()),
        "from_data: size mismatch");
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(values);
  return Tensor(n);
}

Tensor Tensor::scalar(double v) { return full({1}, v); }

Tensor Tensor::randn(const Shape& shape, Rng& rng, double stddev) {
  auto n = new_node(shape);
  for (double& v : n->value) v = rng.normal() * stddev;
  return Tensor(n);
}

Tensor Tensor::uniform(const Shape& shape, Rng& rng, double lo, double hi) {
  auto n = new_node(shape);
  for (double& v : n->value) v = rng.uniform(lo, hi);
  return Tensor(n);
}

double Tensor::item() const {
  check(numel() == 1, "item: tensor is not a scalar");
  return node_->value[0];
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->value = node_->value;
  return Tensor(n);
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), 0.0);
}

void Tensor::backward() const {
  check(numel() == 1, "backward: loss must be a scalar");
  // post-order DFS gives a valid reverse topological order
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn();
  }
}

// ---------------------------------------------------------------------------
// elementwise

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
  (void)name;
  auto out = new_node(a.shape());
  const double* x = a.data();
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = fwd(x[i]);
  if (a.requires_grad()) {
    out->requires_grad = true;
    out->parents = {a.node()};
    Node* self = out.get();
    NodePtr an = a.node();
    out->backward_fn = [self, an, bwd]() {
      double* ga = an->ensure_grad();
      const double* g = self->grad.data();
      const double* x = an->value.data();
      const double* y = self->value.data();
      for (size_t i = 0; i < self->value.size(); i++)
        ga[i] += bwd(g[i], x[i], y[i]);
    };
  }
  return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = new_node(a.shape());
  const double *x = a.data(), *y = b.data();
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = x[i] + y[i];
  if (any_rg({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a.node(), b.node()};
    Node* self = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward_fn = [self, an, bn]() {
      const double* g = self->grad.data();
      size_t n = self->value.size();
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        for (size_t i = 0; i < n; i++) ga[i] += g[i];
      }
      if (bn->requires_grad) {
        double* gb = bn->ensure_grad();
        for (size_t i = 0; i < n; i++) gb[i] += g[i];
      }
    };
  }
  return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto out = new_node(a.shape());
  const double *x = a.data(), *y = b.data();
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = x[i] - y[i];
  if (any_rg({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a.node(), b.node()};
    Node* self = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward_fn = [self, an, bn]() {
      const double* g = self->grad.data();
      size_t n = self->value.size();
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        for (size_t i = 0; i < n; i++) ga[i] += g[i];
      }
      if (bn->requires_grad) {
        double* gb = bn->ensure_grad();
        for (size_t i = 0; i < n; i++) gb[i] -= g[i];
      }
    };
  }
  return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto out = new_node(a.shape());
  const double *x = a.data(), *y = b.data();
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = x[i] * y[i];
  if (any_rg({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a.node(), b.node()};
    Node* self = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward_fn = [self, an, bn]() {
      const double* g = self->grad.data();
      size_t n = self->value.size();
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        const double* y = bn->value.data();
        for (size_t i = 0; i < n; i++) ga[i] += g[i] * y[i];
      }
      if (bn->requires_grad) {
        double* gb = bn->ensure_grad();
        const double* x = an->value.data();
        for (size_t i = 0; i < n; i++) gb[i] += g[i] * x[i];
      }
    };
  }
  return Tensor(out);
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  auto out = new_node(a.shape());
  const double *x = a.data(), *y = b.data();
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = x[i] / y[i];
  if (any_rg({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a.node(), b.node()};
    Node* self = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward_fn = [self, an, bn]() {
      const double* g = self->grad.data();
      const double* x = an->value.data();
      const double* y = bn->value.data();
      size_t n = self->value.size();
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        for (size_t i = 0; i < n; i++) ga[i] += g[i] / y[i];
      }
      if (bn->requires_grad) {
        double* gb = bn->ensure_grad();
        for (size_t i = 0; i < n; i++) gb[i] -= g[i] * x[i] / (y[i] * y[i]);
      }
    };
  }
  return Tensor(out);
}

Tensor neg(const Tensor& a) {
  return unary_op(
      a, "neg", [](double x) { return -x; },
      [](double g, double, double) { return -g; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(
      a, "add_scalar", [s](double x) { return x + s; },
      [](double g, double, double) { return g; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary_op(
      a, "mul_scalar", [s](double x) { return x * s; },
      [s](double g, double, double) { return g * s; });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      a, "exp", [](double x) { return std::exp(x); },
      [](double g, double, double y) { return g * y; });
}

Tensor log(const Tensor& a) {
  return unary_op(
      a, "log", [](double x) { return std::log(x); },
      [](double g, double x, double) { return g / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary_op(
      a, "sqrt", [](double x) { return std::sqrt(x); },
      [](double g, double, double y) { return 0.5 * g / y; });
}

Tensor abs(const Tensor& a) {
  return unary_op(
      a, "abs", [](double x) { return std::abs(x); },
      [](double g, double x, double) {
        return x > 0.0 ? g : (x < 0.0 ? -g : 0.0);
      });
}

Tensor square(const Tensor& a) {
  return unary_op(
      a, "square", [](double x) { return x * x; },
      [](double g, double x, double) { return 2.0 * g * x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double g, double, double y) { return g * y * (1.0 - y); });
}

Tensor mul_by_scalar_tensor(const Tensor& a, const Tensor& s) {
  check(s.numel() == 1, "mul_by_scalar_tensor: scalar expected");
  auto out = new_node(a.shape());
  const double* x = a.data();
  double sv = s.data()[0];
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = x[i] * sv;
  if (any_rg({&a, &s})) {
    out->requires_grad = true;
    out->parents = {a.node(), s.node()};
    Node* self = out.get();
    NodePtr an = a.node(), sn = s.node();
    out->backward_fn = [self, an, sn]() {
      const double* g = self->grad.data();
      size_t n = self->value.size();
      double sv = sn->value[0];
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        for (size_t i = 0; i < n; i++) ga[i] += g[i] * sv;
      }
      if (sn->requires_grad) {
        double* gs = sn->ensure_grad();
        const double* x = an->value.data();
        double acc = 0.0;
        for (size_t i = 0; i < n; i++) acc += g[i] * x[i];
        gs[0] += acc;
      }
    };
  }
  return Tensor(out);
}

Tensor div_by_scalar_tensor(const Tensor& a, const Tensor& s) {
  check(s.numel() == 1, "div_by_scalar_tensor: scalar expected");
  auto out = new_node(a.shape());
  const double* x = a.data();
  double sv = s.data()[0];
  for (size_t i = 0; i < out->value.size(); i++) out->value[i] = x[i] / sv;
  if (any_rg({&a, &s})) {
    out->requires_grad = true;
    out->parents = {a.node(), s.node()};
    Node* self = out.get();
    NodePtr an = a.node(), sn = s.node();
    out->backward_fn = [self, an, sn]() {
      const double* g = self->grad.data();
      size_t n = self->value.size();
      double sv = sn->value[0];
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        for (size_t i = 0; i < n; i++) ga[i] += g[i] / sv;
      }
      if (sn->requires_grad) {
        double* gs = sn->ensure_grad();
        const double* x = an->value.data();
        double acc = 0.0;
        for (size_t i = 0; i < n; i++) acc += g[i] * x[i];
        gs[0] -= acc / (sv * sv);
      }
    };
  }
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// reductions

Tensor sum(const Tensor& a) {
  auto out = new_node({1});
  double acc = 0.0;
  const double* x = a.data();
  for (int64_t i = 0; i < a.numel(); i++) acc += x[i];
  out->value[0] = acc;
  if (a.requires_grad()) {
    out->requires_grad = true;
    out->parents = {a.node()};
    Node* self = out.get();
    NodePtr an = a.node();
    out->backward_fn = [self, an]() {
      double g = self->grad[0];
      double* ga = an->ensure_grad();
      for (size_t i = 0; i < an->value.size(); i++) ga[i] += g;
    };
  }
  return Tensor(out);
}

Tensor mean(const Tensor& a) {
  check(a.numel() > 0, "mean: empty tensor");
  return mul_scalar(sum(a), 1.0 / double(a.numel()));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot");
  return sum(mul(a, b));
}

// ---------------------------------------------------------------------------
// shape ops

Tensor reshape(const Tensor& a, const Shape& shape) {
  check(shape_numel(shape) == a.numel(), "reshape: element count mismatch");
  auto out = std::make_shared<Node>();
  out->shape = shape;
  out->value = a.values();
  if (a.requires_grad()) {
    out->requires_grad = true;
    out->parents = {a.node()};
    Node* self = out.get();
    NodePtr an = a.node();
    out->backward_fn = [self, an]() {
      double* ga = an->ensure_grad();
      const double* g = self->grad.data();
      for (size_t i = 0; i < self->value.size(); i++) ga[i] += g[i];
    };
  }
  return Tensor(out);
}

namespace {

std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size());
  int64_t acc = 1;
  for (int i = int(s.size()) - 1; i >= 0; i--) {
    st[size_t(i)] = acc;
    acc *= s[size_t(i)];
  }
  return st;
}

}  // namespace

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
  int r = a.rank();
  check(int(perm.size()) == r, "permute: rank mismatch");
  Shape out_shape(static_cast<size_t>(r));
  for (int i = 0; i < r; i++) out_shape[size_t(i)] = a.dim(perm[size_t(i)]);
  auto in_strides = row_major_strides(a.shape());
  // stride of output axis i in the input buffer
  std::vector<int64_t> gather(static_cast<size_t>(r));
  for (int i = 0; i < r; i++) gather[size_t(i)] = in_strides[size_t(perm[size_t(i)])];

  auto out = new_node(out_shape);
  const double* x = a.data();
  double* y = out->value.data();
  std::vector<int64_t> idx(static_cast<size_t>(r), 0);
  int64_t n = out->value.size() ? int64_t(out->value.size()) : 0;
  int64_t src = 0;
  for (int64_t flat = 0; flat < n; flat++) {
    y[flat] = x[src];
    for (int ax = r - 1; ax >= 0; ax--) {
      idx[size_t(ax)]++;
      src += gather[size_t(ax)];
      if (idx[size_t(ax)] < out_shape[size_t(ax)]) break;
      src -= gather[size_t(ax)] * out_shape[size_t(ax)];
      idx[size_t(ax)] = 0;
    }
  }
  if (a.requires_grad()) {
    out->requires_grad = true;
    out->parents = {a.node()};
    Node* self = out.get();
    NodePtr an = a.node();
    out->backward_fn = [self, an, gather, out_shape, r]() {
      double* ga = an->ensure_grad();
      const double* g = self->grad.data();
      std::vector<int64_t> idx(static_cast<size_t>(r), 0);
      int64_t src = 0;
      int64_t n = int64_t(self->value.size());
      for (int64_t flat = 0; flat < n; flat++) {
        ga[src] += g[flat];
        for (int ax = r - 1; ax >= 0; ax--) {
          idx[size_t(ax)]++;
          src += gather[size_t(ax)];
          if (idx[size_t(ax)] < out_shape[size_t(ax)]) break;
          src -= gather[size_t(ax)] * out_shape[size_t(ax)];
          idx[size_t(ax)] = 0;
        }
      }
    };
  }
  return Tensor(out);
}

Tensor slice(const Tensor& a, int axis, int64_t start, int64_t end) {
  int r = a.rank();
  check(axis >= 0 && axis < r, "slice: bad axis");
  check(0 <= start && start < end && end <= a.dim(axis), "slice: bad range");
  Shape out_shape = a.shape();
  out_shape[size_t(axis)] = end - start;

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; i++) outer *= a.dim(i);
  for (int i = axis + 1; i < r; i++) inner *= a.dim(i);
  int64_t in_axis = a.dim(axis);
  int64_t out_axis = end - start;

  auto out = new_node(out_shape);
  const double* x = a.data();
  double* y = out->value.data();
  for (int64_t o = 0; o < outer; o++)
    for (int64_t j = 0; j < out_axis; j++)
      std::copy_n(x + (o * in_axis + start + j) * inner, inner,
                  y + (o * out_axis + j) * inner);

  if (a.requires_grad()) {
    out->requires_grad = true;
    out->parents = {a.node()};
    Node* self = out.get();
    NodePtr an = a.node();
    out->backward_fn = [self, an, outer, inner, in_axis, out_axis, start]() {
      double* ga = an->ensure_grad();
      const double* g = self->grad.data();
      for (int64_t o = 0; o < outer; o++)
        for (int64_t j = 0; j < out_axis; j++) {
          const double* gs = g + (o * out_axis + j) * inner;
          double* gd = ga + (o * in_axis + start + j) * inner;
          for (int64_t i = 0; i < inner; i++) gd[i] += gs[i];
        }
    };
  }
  return Tensor(out);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  check(!parts.empty(), "concat: no inputs");
  int r = parts[0].rank();
  check(axis >= 0 && axis < r, "concat: bad axis");
  Shape out_shape = parts[0].shape();
  int64_t axis_total = 0;
  for (const Tensor& p : parts) {
    check(p.rank() == r, "concat: rank mismatch");
    for (int i = 0; i < r; i++)
      if (i != axis)
        check(p.dim(i) == out_shape[size_t(i)], "concat: shape mismatch");
    axis_total += p.dim(axis);
  }
  out_shape[size_t(axis)] = axis_total;

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; i++) outer *= out_shape[size_t(i)];
  for (int i = axis + 1; i < r; i++) inner *= out_shape[size_t(i)];

  auto out = new_node(out_shape);
  double* y = out->value.data();
  int64_t offset = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    int64_t pa = p.dim(axis);
    const double* x = p.data();
    for (int64_t o = 0; o < outer; o++)
      std::copy_n(x + o * pa * inner, pa * inner,
                  y + (o * axis_total + offset) * inner);
    offset += pa;
    rg = rg || p.requires_grad();
  }
  if (rg) {
    out->requires_grad = true;
    std::vector<NodePtr> ps;
    std::vector<int64_t> sizes;
    for (const Tensor& p : parts) {
      ps.push_back(p.node());
      sizes.push_back(p.dim(axis));
    }
    for (auto& p : ps) out->parents.push_back(p);
    Node* self = out.get();
    out->backward_fn = [self, ps, sizes, outer, inner, axis_total]() {
      const double* g = self->grad.data();
      int64_t offset = 0;
      for (size_t pi = 0; pi < ps.size(); pi++) {
        int64_t pa = sizes[pi];
        if (ps[pi]->requires_grad) {
          double* ga = ps[pi]->ensure_grad();
          for (int64_t o = 0; o < outer; o++) {
            const double* gs = g + (o * axis_total + offset) * inner;
            double* gd = ga + o * pa * inner;
            for (int64_t i = 0; i < pa * inner; i++) gd[i] += gs[i];
          }
        }
        offset += pa;
      }
    };
  }
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// matmul

namespace {

// C[M,N] += A[M,K] @ B[K,N]
void gemm_acc(const double* a, const double* b, double* c, int64_t m,
              int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; i++) {
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; p++) {
      double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; j++) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] += A^T[M,K] @ B[K,N] where A is stored [K,M]
void gemm_at_acc(const double* a, const double* b, double* c, int64_t m,
                 int64_t k, int64_t n) {
  for (int64_t p = 0; p < k; p++) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (int64_t i = 0; i < m; i++) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (int64_t j = 0; j < n; j++) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] += A[M,K] @ B^T[K,N] where B is stored [N,K]
void gemm_bt_acc(const double* a, const double* b, double* c, int64_t m,
                 int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; i++) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; j++) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; p++) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  int ra = a.rank(), rb = b.rank();
  check((ra == 2 || ra == 3) && (rb == 2 || rb == 3), "matmul: rank");
  int64_t batch = ra == 3 ? a.dim(0) : 1;
  int64_t m = a.dim(ra - 2), k = a.dim(ra - 1);
  check(b.dim(rb - 2) == k, "matmul: inner dimension mismatch");
  int64_t n = b.dim(rb - 1);
  bool b_batched = rb == 3;
  if (b_batched) check(b.dim(0) == batch && ra == 3, "matmul: batch mismatch");

  Shape out_shape = ra == 3 ? Shape{batch, m, n} : Shape{m, n};
  auto out = new_node(out_shape);
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = out->value.data();
  for (int64_t bb = 0; bb < batch; bb++)
    gemm_acc(ad + bb * m * k, bd + (b_batched ? bb * k * n : 0),
             cd + bb * m * n, m, k, n);

  if (any_rg({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a.node(), b.node()};
    Node* self = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward_fn = [self, an, bn, batch, m, k, n, b_batched]() {
      const double* g = self->grad.data();
      if (an->requires_grad) {
        double* ga = an->ensure_grad();
        const double* bd = bn->value.data();
        // dA = dC @ B^T
        for (int64_t bb = 0; bb < batch; bb++)
          gemm_bt_acc(g + bb * m * n, bd + (b_batched ? bb * k * n : 0),
                      ga + bb * m * k, m, n, k);
      }
      if (bn->requires_grad) {
        double* gb = bn->ensure_grad();
        const double* ad = an->value.data();
        // dB = A^T @ dC (accumulated over batch when B is shared)
        for (int64_t bb = 0; bb < batch; bb++)
          gemm_at_acc(ad + bb * m * k, g + bb * m * n,
                      gb + (b_batched ? bb * k * n : 0), k, m, n);
      }
    };
  }
  return Tensor(out);
}

Tensor transpose_last2(const Tensor& a) {
  int r = a.rank();
  check(r >= 2, "transpose_last2: rank");
  std::vector<int> perm(static_cast<size_t>(r));
  for (int i = 0; i < r; i++) perm[size_t(i)] = i;
  std::swap(perm[size_t(r - 1)], perm[size_t(r - 2)]);
  return permute(a, perm);
}

}  // namespace apollo::ag
