// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "streamvsr/kernels.hpp"

namespace streamvsr::ag {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

bool any_requires(const std::vector<Var>& parents) {
  for (const auto& p : parents)
    if (p.requires_grad()) return true;
  return false;
}

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(const Tensor&)> back) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = any_requires(parents);
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->back = std::move(back);
  }
  return Var::from_node(std::move(n));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.val().same_shape(b.val()))
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.val().shape_str() + " vs " + b.val().shape_str());
}

}  // namespace

void backward(const Var& loss) {
  if (loss.val().numel() != 1)
    throw ArgumentError("backward: loss must be a scalar");
  // Iterative topological order (children before parents after reversal).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.push_back({loss.node().get(), 0});
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Node* node = stack.back().first;
    const std::size_t idx = stack.back().second;
    if (idx < node->parents.size()) {
      ++stack.back().second;  // advance before push: push may reallocate
      Node* p = node->parents[idx].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // `order` is post-order: parents of a node appear before it, so iterate
  // from the back (loss first) and every node's grad is complete before its
  // back() runs.
  for (Node* n : order) n->grad_buf();
  loss.node()->grad.v[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->back) n->back(n->grad);
  }
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a.val() + b.val();
  auto an = a.node(), bn = b.node();
  return make_node(std::move(out), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) axpy(an->grad_buf(), 1.0, g);
    if (bn->requires_grad) axpy(bn->grad_buf(), 1.0, g);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a.val() - b.val();
  auto an = a.node(), bn = b.node();
  return make_node(std::move(out), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) axpy(an->grad_buf(), 1.0, g);
    if (bn->requires_grad) axpy(bn->grad_buf(), -1.0, g);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a.val();
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.val().v[i];
  auto an = a.node(), bn = b.node();
  return make_node(std::move(out), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) {
      Tensor& ga = an->grad_buf();
      for (std::size_t i = 0; i < g.v.size(); ++i)
        ga.v[i] += g.v[i] * bn->value.v[i];
    }
    if (bn->requires_grad) {
      Tensor& gb = bn->grad_buf();
      for (std::size_t i = 0; i < g.v.size(); ++i)
        gb.v[i] += g.v[i] * an->value.v[i];
    }
  });
}

Var affine(const Var& a, double alpha, double beta) {
  Tensor out = a.val();
  for (auto& x : out.v) x = alpha * x + beta;
  auto an = a.node();
  return make_node(std::move(out), {a}, [an, alpha](const Tensor& g) {
    if (an->requires_grad) axpy(an->grad_buf(), alpha, g);
  });
}

Var mul_gate(const Var& gate, const Var& x) {
  const Tensor& gt = gate.val();
  const Tensor& xt = x.val();
  if (gt.dims.size() != 3 || xt.dims.size() != 3 || gt.c() != 1 ||
      gt.h() != xt.h() || gt.w() != xt.w())
    throw DimensionError("mul_gate: gate must be {1,h,w} matching x");
  Tensor out = xt;
  const int hw = xt.h() * xt.w();
  for (int c = 0; c < xt.c(); ++c)
    for (int i = 0; i < hw; ++i)
      out.v[static_cast<std::size_t>(c) * hw + i] *= gt.v[i];
  auto gn = gate.node(), xn = x.node();
  return make_node(std::move(out), {gate, x}, [gn, xn, hw](const Tensor& g) {
    const int c = xn->value.c();
    if (gn->requires_grad) {
      Tensor& gg = gn->grad_buf();
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < hw; ++i)
          gg.v[i] += g.v[static_cast<std::size_t>(ch) * hw + i] *
                     xn->value.v[static_cast<std::size_t>(ch) * hw + i];
    }
    if (xn->requires_grad) {
      Tensor& gx = xn->grad_buf();
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < hw; ++i)
          gx.v[static_cast<std::size_t>(ch) * hw + i] +=
              g.v[static_cast<std::size_t>(ch) * hw + i] * gn->value.v[i];
    }
  });
}

Var concat_c(const Var& a, const Var& b) {
  const Tensor& at = a.val();
  const Tensor& bt = b.val();
  if (at.dims.size() != 3 || bt.dims.size() != 3 || at.h() != bt.h() ||
      at.w() != bt.w())
    throw DimensionError("concat_c: spatial dims must match");
  Tensor out({at.c() + bt.c(), at.h(), at.w()});
  std::copy(at.v.begin(), at.v.end(), out.v.begin());
  std::copy(bt.v.begin(), bt.v.end(), out.v.begin() + at.v.size());
  auto an = a.node(), bn = b.node();
  const std::size_t na = at.v.size();
  return make_node(std::move(out), {a, b}, [an, bn, na](const Tensor& g) {
    if (an->requires_grad) {
      Tensor& ga = an->grad_buf();
      for (std::size_t i = 0; i < na; ++i) ga.v[i] += g.v[i];
    }
    if (bn->requires_grad) {
      Tensor& gb = bn->grad_buf();
      for (std::size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += g.v[na + i];
    }
  });
}

namespace {

template <typename F, typename DF>
Var unary_ew(const Var& a, F f, DF df) {
  Tensor out = a.val();
  for (auto& x : out.v) x = f(x);
  auto an = a.node();
  return make_node(std::move(out), {a}, [an, df](const Tensor& g) {
    if (!an->requires_grad) return;
    Tensor& ga = an->grad_buf();
    for (std::size_t i = 0; i < g.v.size(); ++i)
      ga.v[i] += g.v[i] * df(an->value.v[i]);
  });
}

double sigmoid_s(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var relu(const Var& a) {
  return unary_ew(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary_ew(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x) { return x > 0 ? 1.0 : slope; });
}

Var silu(const Var& a) {
  return unary_ew(
      a, [](double x) { return x * sigmoid_s(x); },
      [](double x) {
        const double s = sigmoid_s(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var sigmoid(const Var& a) {
  return unary_ew(a, [](double x) { return sigmoid_s(x); },
                  [](double x) {
                    const double s = sigmoid_s(x);
                    return s * (1.0 - s);
                  });
}

Var softplus(const Var& a) {
  return unary_ew(
      a,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); },
      [](double x) { return sigmoid_s(x); });
}

Var upsample2(const Var& a) {
  const Tensor& at = a.val();
  if (at.dims.size() != 3) throw DimensionError("upsample2: rank-3 expected");
  Tensor out({at.c(), 2 * at.h(), 2 * at.w()});
  kernels::upsample2_fwd(at.c(), at.h(), at.w(), at.v.data(), out.v.data());
  auto an = a.node();
  return make_node(std::move(out), {a}, [an](const Tensor& g) {
    if (!an->requires_grad) return;
    kernels::upsample2_bwd(an->value.c(), an->value.h(), an->value.w(),
                           g.v.data(), an->grad_buf().v.data());
  });
}

Var avgpool(const Var& a, int k) {
  const Tensor& at = a.val();
  if (at.dims.size() != 3) throw DimensionError("avgpool: rank-3 expected");
  if (k < 1 || at.h() % k != 0 || at.w() % k != 0)
    throw DimensionError("avgpool: dims not divisible by k");
  Tensor out({at.c(), at.h() / k, at.w() / k});
  kernels::avgpool_fwd(at.c(), at.h(), at.w(), k, at.v.data(), out.v.data());
  auto an = a.node();
  return make_node(std::move(out), {a}, [an, k](const Tensor& g) {
    if (!an->requires_grad) return;
    kernels::avgpool_bwd(an->value.c(), an->value.h(), an->value.w(), k,
                         g.v.data(), an->grad_buf().v.data());
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor& xt = x.val();
  const Tensor& wt = w.val();
  if (xt.dims.size() != 3 || wt.dims.size() != 4)
    throw DimensionError("conv2d: expected x {c,h,w}, w {co,ci,kh,kw}");
  if (wt.dims[1] != xt.c())
    throw DimensionError("conv2d: channel mismatch");
  kernels::Conv2dShape s;
  s.ci = xt.c();
  s.hi = xt.h();
  s.wi = xt.w();
  s.co = wt.dims[0];
  s.kh = wt.dims[2];
  s.kw = wt.dims[3];
  s.stride = stride;
  s.pad = pad;
  Tensor out({s.co, s.ho(), s.wo()});
  kernels::conv2d_fwd(s, xt.v.data(), wt.v.data(),
                      b.defined() ? b.val().v.data() : nullptr, out.v.data());
  auto xn = x.node(), wn = w.node(), bn = b.node();
  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_node(std::move(out), std::move(parents),
                   [xn, wn, bn, s](const Tensor& g) {
                     if (xn->requires_grad)
                       kernels::conv2d_bwd_input(s, g.v.data(),
                                                 wn->value.v.data(),
                                                 xn->grad_buf().v.data());
                     if (wn->requires_grad)
                       kernels::conv2d_bwd_weight(
                           s, g.v.data(), xn->value.v.data(),
                           wn->grad_buf().v.data(),
                           bn && bn->requires_grad
                               ? bn->grad_buf().v.data()
                               : nullptr);
                   });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& xt = x.val();
  const Tensor& wt = w.val();
  if (xt.dims.size() != 1 || wt.dims.size() != 2 || wt.dims[1] != xt.dims[0])
    throw DimensionError("linear: shape mismatch");
  const int m = wt.dims[0], n = wt.dims[1];
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double acc = b.defined() ? b.val().v[i] : 0.0;
    for (int j = 0; j < n; ++j)
      acc += wt.v[static_cast<std::size_t>(i) * n + j] * xt.v[j];
    out.v[i] = acc;
  }
  auto xn = x.node(), wn = w.node(), bn = b.node();
  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_node(std::move(out), std::move(parents),
                   [xn, wn, bn, m, n](const Tensor& g) {
                     if (xn->requires_grad) {
                       Tensor& gx = xn->grad_buf();
                       for (int j = 0; j < n; ++j) {
                         double acc = 0.0;
                         for (int i = 0; i < m; ++i)
                           acc += g.v[i] *
                                  wn->value.v[static_cast<std::size_t>(i) * n + j];
                         gx.v[j] += acc;
                       }
                     }
                     if (wn->requires_grad) {
                       Tensor& gw = wn->grad_buf();
                       for (int i = 0; i < m; ++i)
                         for (int j = 0; j < n; ++j)
                           gw.v[static_cast<std::size_t>(i) * n + j] +=
                               g.v[i] * xn->value.v[j];
                     }
                     if (bn && bn->requires_grad) {
                       Tensor& gb = bn->grad_buf();
                       for (int i = 0; i < m; ++i) gb.v[i] += g.v[i];
                     }
                   });
}

Var add_channel_bias(const Var& x, const Var& bias) {
  const Tensor& xt = x.val();
  const Tensor& bt = bias.val();
  if (xt.dims.size() != 3 || bt.dims.size() != 1 || bt.dims[0] != xt.c())
    throw DimensionError("add_channel_bias: shape mismatch");
  Tensor out = xt;
  const int hw = xt.h() * xt.w();
  for (int c = 0; c < xt.c(); ++c)
    for (int i = 0; i < hw; ++i)
      out.v[static_cast<std::size_t>(c) * hw + i] += bt.v[c];
  auto xn = x.node(), bn = bias.node();
  return make_node(std::move(out), {x, bias}, [xn, bn, hw](const Tensor& g) {
    if (xn->requires_grad) axpy(xn->grad_buf(), 1.0, g);
    if (bn->requires_grad) {
      Tensor& gb = bn->grad_buf();
      const int c = static_cast<int>(gb.v.size());
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = 0; i < hw; ++i)
          acc += g.v[static_cast<std::size_t>(ch) * hw + i];
        gb.v[ch] += acc;
      }
    }
  });
}

Var mean_all(const Var& a) {
  const Tensor& at = a.val();
  const double n = static_cast<double>(at.numel());
  Tensor out({1});
  double acc = 0.0;
  for (double x : at.v) acc += x;
  out.v[0] = acc / n;
  auto an = a.node();
  return make_node(std::move(out), {a}, [an, n](const Tensor& g) {
    if (!an->requires_grad) return;
    Tensor& ga = an->grad_buf();
    const double s = g.v[0] / n;
    for (auto& x : ga.v) x += s;
  });
}

Var mse(const Var& a, const Var& b) {
  check_same_shape(a, b, "mse");
  const double n = static_cast<double>(a.val().numel());
  Tensor out({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < a.val().v.size(); ++i) {
    const double d = a.val().v[i] - b.val().v[i];
    acc += d * d;
  }
  out.v[0] = acc / n;
  auto an = a.node(), bn = b.node();
  return make_node(std::move(out), {a, b}, [an, bn, n](const Tensor& g) {
    const double s = 2.0 * g.v[0] / n;
    if (an->requires_grad) {
      Tensor& ga = an->grad_buf();
      for (std::size_t i = 0; i < ga.v.size(); ++i)
        ga.v[i] += s * (an->value.v[i] - bn->value.v[i]);
    }
    if (bn->requires_grad) {
      Tensor& gb = bn->grad_buf();
      for (std::size_t i = 0; i < gb.v.size(); ++i)
        gb.v[i] -= s * (an->value.v[i] - bn->value.v[i]);
    }
  });
}

Var smooth_l1(const Var& a, const Var& b, double beta) {
  check_same_shape(a, b, "smooth_l1");
  const double n = static_cast<double>(a.val().numel());
  Tensor out({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < a.val().v.size(); ++i) {
    const double d = std::fabs(a.val().v[i] - b.val().v[i]);
    acc += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
  }
  out.v[0] = acc / n;
  auto an = a.node(), bn = b.node();
  return make_node(std::move(out), {a, b}, [an, bn, n, beta](const Tensor& g) {
    const double s = g.v[0] / n;
    for (std::size_t i = 0; i < an->value.v.size(); ++i) {
      const double d = an->value.v[i] - bn->value.v[i];
      double dd = d / beta;
      if (dd > 1.0) dd = 1.0;
      if (dd < -1.0) dd = -1.0;
      if (an->requires_grad) an->grad_buf().v[i] += s * dd;
      if (bn->requires_grad) bn->grad_buf().v[i] -= s * dd;
    }
  });
}

}  // namespace streamvsr::ag
