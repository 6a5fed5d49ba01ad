// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "streamvsr/autograd.hpp"
#include "streamvsr/rng.hpp"

namespace streamvsr::nn {

// Name -> parameter Var; std::map keeps iteration order deterministic for
// the optimizer, checkpoints and freeze-group hashing.
using ParamMap = std::map<std::string, ag::Var>;

struct Conv2d {
  ag::Var w, b;
  int stride = 1, pad = 1;

  Conv2d() = default;
  // He-normal init; init_gain 0 gives an all-zero layer (residual tails).
  Conv2d(int ci, int co, int k, int stride_, int pad_, Rng& rng,
         double init_gain = 1.0);

  ag::Var operator()(const ag::Var& x) const {
    return ag::conv2d(x, w, b, stride, pad);
  }
  void collect(ParamMap& m, const std::string& prefix) {
    m[prefix + ".w"] = w;
    m[prefix + ".b"] = b;
  }
};

struct Linear {
  ag::Var w, b;
  Linear() = default;
  Linear(int in, int out, Rng& rng);
  ag::Var operator()(const ag::Var& x) const { return ag::linear(x, w, b); }
  void collect(ParamMap& m, const std::string& prefix) {
    m[prefix + ".w"] = w;
    m[prefix + ".b"] = b;
  }
};

// Classic sinusoidal position features for an integer timestep.
Tensor sin_time_embedding(int t, int dim);

// 3-conv patch discriminator on RGB; returns a logit map.
struct PatchDiscriminator {
  Conv2d c1, c2, c3;
  PatchDiscriminator() = default;
  PatchDiscriminator(int width, Rng& rng);
  ag::Var forward(const ag::Var& rgb) const;
  void collect(ParamMap& m, const std::string& prefix) {
    c1.collect(m, prefix + ".c1");
    c2.collect(m, prefix + ".c2");
    c3.collect(m, prefix + ".c3");
  }
};

// Generator-side adversarial objective: mean softplus(-D(fake)).
ag::Var gan_generator_loss(const PatchDiscriminator& d, const ag::Var& fake);
// Discriminator hinge objective on real/fake logit maps.
ag::Var gan_discriminator_loss(const PatchDiscriminator& d, const ag::Var& real,
                               const ag::Var& fake_detached);

void set_group_requires_grad(ParamMap& params, const std::string& prefix,
                             bool trainable);

// FNV hash over a parameter group; used to assert frozen groups bitwise.
std::uint64_t group_hash(const ParamMap& params, const std::string& prefix);

}  // namespace streamvsr::nn
