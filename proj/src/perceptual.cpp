// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/perceptual.hpp"

namespace streamvsr::perceptual {

PerceptualProxy::PerceptualProxy(std::uint64_t seed) {
  Rng rng(seed);
  c1_ = nn::Conv2d(3, 8, 3, 1, 1, rng);
  c2_ = nn::Conv2d(8, 16, 3, 2, 1, rng);
  c3_ = nn::Conv2d(16, 16, 3, 2, 1, rng);
  for (auto* conv : {&c1_, &c2_, &c3_}) {
    conv->w.set_requires_grad(false);
    conv->b.set_requires_grad(false);
  }
}

ag::Var PerceptualProxy::features(const ag::Var& x) const {
  auto h1 = ag::relu(c1_(x));
  auto h2 = ag::relu(c2_(h1));
  return c3_(h2);
}

ag::Var PerceptualProxy::distance(const ag::Var& a, const ag::Var& b) const {
  return ag::mse(features(a), features(b));
}

double PerceptualProxy::distance(const Tensor& a, const Tensor& b) const {
  return distance(ag::Var::constant(a), ag::Var::constant(b)).val().v[0];
}

const PerceptualProxy& proxy() {
  static const PerceptualProxy instance;
  return instance;
}

}  // namespace streamvsr::perceptual
