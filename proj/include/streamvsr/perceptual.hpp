// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "streamvsr/nn.hpp"

namespace streamvsr::perceptual {

// Fixed-seed, never-trained 3-layer conv feature extractor. The distance is
// the mean squared difference of the final feature maps. Deterministic by
// construction, so metric values are reproducible across runs and machines.
class PerceptualProxy {
 public:
  static constexpr std::uint64_t kFixedSeed = 0x5eedfaced0c5ULL;

  explicit PerceptualProxy(std::uint64_t seed = kFixedSeed);

  ag::Var distance(const ag::Var& a, const ag::Var& b) const;
  double distance(const Tensor& a, const Tensor& b) const;

 private:
  ag::Var features(const ag::Var& x) const;
  nn::Conv2d c1_, c2_, c3_;
};

// Shared instance with the fixed seed.
const PerceptualProxy& proxy();

}  // namespace streamvsr::perceptual
