// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace hoidet {

// 64-bit by default; tests rely on it. Define HOIDET_SCALAR_FLOAT32 for a
// 32-bit inference build.
#ifdef HOIDET_SCALAR_FLOAT32
using Scalar = float;
#else
using Scalar = double;
#endif

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("empty shape");
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("non-positive shape extent");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

struct Node {
  Shape shape;
  std::vector<Scalar> value;
  std::vector<Scalar> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // null for leaves

  std::vector<Scalar>& grad_buf() {
    if (grad.empty()) grad.assign(value.size(), Scalar(0));
    return grad;
  }
  bool is_leaf() const { return !backprop; }
};

// Thread-local switch that makes every op produce constant (history-free)
// results. Used for inference so no graph is retained.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Dense row-major array handle with optional recorded history. Copying a
// Tensor aliases the underlying node.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<Scalar> data, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    if (n != data.size())
      throw std::invalid_argument("data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
    n_ = std::make_shared<Node>();
    n_->shape = std::move(shape);
    n_->value = std::move(data);
    n_->requires_grad = requires_grad && grad_mode();
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<Scalar>(n, Scalar(0)), requires_grad);
  }

  static Tensor full(Shape shape, Scalar v, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<Scalar>(n, v), requires_grad);
  }

  static Tensor scalar(Scalar v) { return Tensor({1}, {v}); }

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  int dim(int i) const { return node().shape.at(static_cast<std::size_t>(i)); }
  int ndim() const { return static_cast<int>(node().shape.size()); }
  std::size_t size() const { return node().value.size(); }

  const std::vector<Scalar>& values() const { return node().value; }
  Scalar value_at(std::size_t i) const { return node().value.at(i); }
  Scalar item() const {
    if (size() != 1) throw std::invalid_argument("item() on non-scalar tensor");
    return node().value[0];
  }

  // Direct mutation is only meaningful on leaves (parameters, test probes);
  // interior nodes are invalidated by it.
  std::vector<Scalar>& mutable_values() { return node().value; }

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool b) {
    if (b && !node().is_leaf())
      throw std::invalid_argument("requires_grad can only be toggled on leaves");
    node().requires_grad = b;
  }

  const std::vector<Scalar>& grad() const {
    Node& n = node();
    if (n.grad.empty()) n.grad.assign(n.value.size(), Scalar(0));
    return n.grad;
  }
  void zero_grad() {
    Node& n = node();
    n.grad.assign(n.value.size(), Scalar(0));
  }

  // Reverse-mode sweep from a scalar. Gradients accumulate on leaves across
  // calls; interior nodes are reset every sweep.
  void backward() const {
    Node& root = node();
    if (root.value.size() != 1)
      throw std::invalid_argument("backward() requires a scalar loss");
    if (!root.requires_grad) return;

    // Iterative postorder over the recorded DAG; parents come out first.
    // The graph is acyclic by construction (nodes are created after their
    // parents), so a visited parent is always already completed.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
      Node* n;
      std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({&root, 0});
    visited.insert(&root);
    while (!stack.empty()) {
      Frame f = stack.back();
      Node* child = nullptr;
      while (f.next < f.n->parents.size()) {
        Node* p = f.n->parents[f.next].get();
        ++f.next;
        if (p->requires_grad && !visited.count(p)) {
          child = p;
          break;
        }
      }
      stack.back().next = f.next;
      if (child) {
        visited.insert(child);
        stack.push_back({child, 0});
      } else {
        order.push_back(f.n);
        stack.pop_back();
      }
    }

    for (Node* n : order)
      if (!n->is_leaf()) n->grad.assign(n->value.size(), Scalar(0));
    root.grad_buf()[0] += Scalar(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backprop) (*it)->backprop(**it);
  }

  Node& node() const {
    if (!n_) throw std::logic_error("use of undefined tensor");
    return *n_;
  }
  const std::shared_ptr<Node>& handle() const { return n_; }

 private:
  std::shared_ptr<Node> n_;
};

inline void check_finite(const Tensor& t, const char* op) {
  for (Scalar v : t.values())
    if (!std::isfinite(v))
      throw std::domain_error(std::string(op) + ": non-finite value produced");
}

// Builds an op node. Parents whose requires_grad is false are still kept
// alive for the closure but receive no gradient.
inline Tensor make_op(Shape shape, std::vector<Scalar> value,
                      std::vector<Tensor> parents,
                      std::function<void(Node&)> backprop, const char* name) {
  Tensor out(std::move(shape), std::move(value), false);
  check_finite(out, name);
  bool needs = false;
  if (grad_mode())
    for (const Tensor& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    Node& n = out.node();
    n.requires_grad = true;
    n.parents.reserve(parents.size());
    for (const Tensor& p : parents) n.parents.push_back(p.handle());
    n.backprop = std::move(backprop);
  }
  return out;
}

}  // namespace hoidet
