// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "apollo/common.hpp"

namespace apollo::ag {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);

// One node of the dynamically built computation graph. Nodes own their
// values; the graph is held alive through parent pointers captured by the
// backward closures, so a released output frees its whole upstream graph
// (parameters excepted, they are owned by their store).
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until touched by backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  double* ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad.data();
  }
};

using NodePtr = std::shared_ptr<Node>;

// Value-semantics handle to a Node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double v);
  static Tensor from_data(const Shape& shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor randn(const Shape& shape, Rng& rng, double stddev = 1.0);
  static Tensor uniform(const Shape& shape, Rng& rng, double lo, double hi);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return int64_t(node_->value.size()); }
  int64_t dim(int i) const { return node_->shape[size_t(i)]; }
  int rank() const { return int(node_->shape.size()); }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    node_->requires_grad = rg;
    return *this;
  }

  // value copy with no graph history
  Tensor detach() const;

  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& grad() { return node_->grad; }
  void zero_grad();

  // reverse-mode sweep from a scalar
  void backward() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// --- elementwise ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);   // inputs must stay positive
Tensor sqrt(const Tensor& a);  // inputs must stay positive
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// a * s and a / s with a scalar tensor s (shape {1})
Tensor mul_by_scalar_tensor(const Tensor& a, const Tensor& s);
Tensor div_by_scalar_tensor(const Tensor& a, const Tensor& s);

// --- reductions ---
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

// --- shape ---
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor permute(const Tensor& a, const std::vector<int>& perm);
Tensor slice(const Tensor& a, int axis, int64_t start, int64_t end);
Tensor concat(const std::vector<Tensor>& parts, int axis);

// --- linear algebra ---
// 2D x 2D, 3D x 2D (shared rhs), or 3D x 3D (batched)
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& a);

}  // namespace apollo::ag
