// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/nn.hpp"

#include <cmath>

namespace streamvsr::nn {

Conv2d::Conv2d(int ci, int co, int k, int stride_, int pad_, Rng& rng,
               double init_gain)
    : stride(stride_), pad(pad_) {
  Tensor wt({co, ci, k, k});
  const double std = init_gain * std::sqrt(2.0 / (ci * k * k));
  for (auto& x : wt.v) x = std * rng.normal();
  w = ag::Var::leaf(std::move(wt), true);
  b = ag::Var::leaf(Tensor({co}), true);
}

Linear::Linear(int in, int out, Rng& rng) {
  Tensor wt({out, in});
  const double std = std::sqrt(2.0 / in);
  for (auto& x : wt.v) x = std * rng.normal();
  w = ag::Var::leaf(std::move(wt), true);
  b = ag::Var::leaf(Tensor({out}), true);
}

Tensor sin_time_embedding(int t, int dim) {
  Tensor e({dim});
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e.v[i] = std::sin(t * freq);
    e.v[half + i] = std::cos(t * freq);
  }
  return e;
}

PatchDiscriminator::PatchDiscriminator(int width, Rng& rng)
    : c1(3, width, 3, 2, 1, rng),
      c2(width, 2 * width, 3, 2, 1, rng),
      c3(2 * width, 1, 3, 1, 1, rng) {}

ag::Var PatchDiscriminator::forward(const ag::Var& rgb) const {
  auto h1 = ag::leaky_relu(c1(rgb), 0.2);
  auto h2 = ag::leaky_relu(c2(h1), 0.2);
  return c3(h2);
}

ag::Var gan_generator_loss(const PatchDiscriminator& d, const ag::Var& fake) {
  return ag::mean_all(ag::softplus(ag::scale(d.forward(fake), -1.0)));
}

ag::Var gan_discriminator_loss(const PatchDiscriminator& d, const ag::Var& real,
                               const ag::Var& fake_detached) {
  auto real_term = ag::mean_all(ag::relu(ag::affine(d.forward(real), -1.0, 1.0)));
  auto fake_term =
      ag::mean_all(ag::relu(ag::affine(d.forward(fake_detached), 1.0, 1.0)));
  return ag::add(real_term, fake_term);
}

void set_group_requires_grad(ParamMap& params, const std::string& prefix,
                             bool trainable) {
  for (auto& [name, var] : params)
    if (name.rfind(prefix, 0) == 0) var.set_requires_grad(trainable);
}

std::uint64_t group_hash(const ParamMap& params, const std::string& prefix) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, var] : params) {
    if (name.rfind(prefix, 0) != 0) continue;
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= content_hash(var.val());
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace streamvsr::nn
