// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "streamvsr/tensor.hpp"

namespace streamvsr::ag {

// Minimal reverse-mode autodiff over Tensor. A Var is a shared handle to a
// graph node; graphs are rebuilt per forward pass and freed when the last
// handle drops. Parameters are long-lived leaf Vars whose grads accumulate
// across the ops that consume them.
namespace detail {
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::string tag;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Tensor& gout)> back;

  Tensor& grad_buf() {
    if (!grad.defined()) grad = Tensor::zeros(value.dims);
    return grad;
  }
};
}  // namespace detail

class Var {
 public:
  Var() = default;

  static Var leaf(Tensor v, bool requires_grad = false) {
    Var out;
    out.n_ = std::make_shared<detail::Node>();
    out.n_->value = std::move(v);
    out.n_->requires_grad = requires_grad;
    return out;
  }
  static Var constant(Tensor v) { return leaf(std::move(v), false); }

  bool defined() const { return n_ != nullptr; }
  const Tensor& val() const { return n_->value; }
  Tensor& val() { return n_->value; }
  const Tensor& grad() const { return n_->grad_buf(); }
  Tensor& grad() { return n_->grad_buf(); }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  void set_requires_grad(bool r) { n_->requires_grad = r; }
  void zero_grad() {
    if (n_ && n_->grad.defined())
      std::fill(n_->grad.v.begin(), n_->grad.v.end(), 0.0);
  }
  void set_tag(std::string t) { n_->tag = std::move(t); }
  const std::string& tag() const { return n_->tag; }

  // A fresh constant leaf carrying a copy of the value (cuts the graph).
  Var detach() const { return constant(n_->value); }

  std::shared_ptr<detail::Node> node() const { return n_; }

  static Var from_node(std::shared_ptr<detail::Node> n) {
    Var v;
    v.n_ = std::move(n);
    return v;
  }

 private:
  std::shared_ptr<detail::Node> n_;
};

// Runs reverse accumulation from a scalar loss ({1}-shaped Var).
void backward(const Var& loss);

// --- elementwise / structural ops ---
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// alpha * a + beta, elementwise.
Var affine(const Var& a, double alpha, double beta);
inline Var scale(const Var& a, double s) { return affine(a, s, 0.0); }
// Gate {1,h,w} broadcast-multiplied over the channels of x {c,h,w}.
Var mul_gate(const Var& gate, const Var& x);
Var concat_c(const Var& a, const Var& b);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var silu(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);

// --- shape ops ---
Var upsample2(const Var& a);
Var avgpool(const Var& a, int k);

// --- dense / conv ---
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x {n}, w {m,n}, b {m} -> {m}
Var linear(const Var& x, const Var& w, const Var& b);
// x {c,h,w} plus per-channel bias {c}.
Var add_channel_bias(const Var& x, const Var& bias);

// --- reductions / losses (all return {1}) ---
Var mean_all(const Var& a);
Var mse(const Var& a, const Var& b);
Var smooth_l1(const Var& a, const Var& b, double beta = 1.0);

}  // namespace streamvsr::ag
