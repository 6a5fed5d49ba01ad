// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "streamvsr/nn.hpp"

namespace streamvsr::codec {

struct CodecConfig {
  int latent_channels = 4;
  int w1 = 16, w2 = 32;  // channel widths of the two halving stages
};

// How decode_temporal combines warped-previous features with the spatial
// path. `zero` bypasses fusion entirely (identical to plain decode), `one`
// takes the aligned temporal branch alone; both exist as ablation switches.
enum class GateMode { learned, zero, one };

// Multi-scale features of the warped previous output, ordered by the
// decoder stage that consumes them: [0] at half target resolution, [1] at
// full target resolution.
struct TemporalFeature {
  std::vector<ag::Var> scales;
};

// Per-scale alignment conv plus a 1-channel convex fusion gate.
struct Tpm {
  nn::Conv2d align;
  nn::Conv2d gate;
  Tpm() = default;
  Tpm(int channels, Rng& rng);
  ag::Var fuse(const ag::Var& spatial, const ag::Var& temporal,
               GateMode mode) const;
  void collect(nn::ParamMap& m, const std::string& prefix) {
    align.collect(m, prefix + ".align");
    gate.collect(m, prefix + ".gate");
  }
};

// Tiny deterministic autoencoder: stride-4 conv encoder to latent space and
// a x4 upsampling decoder with a TPM after each upsampling stage. A frozen
// copy of the encoder's first two convs (run at strides 1,2) extracts the
// temporal feature pyramid from warped previous outputs.
class Codec {
 public:
  Codec() = default;
  Codec(const CodecConfig& cfg, Rng& rng);

  const CodecConfig& config() const { return cfg_; }

  // Latents are divided by this factor on encode and multiplied back on
  // decode, keeping the working latent distribution near unit variance to
  // match the standard-normal latents the sampler starts from. Calibrated
  // after codec pretraining; reconstruction is invariant to it.
  double latent_scale() const { return latent_scale_; }
  void set_latent_scale(double s);

  ag::Var encode(const ag::Var& frame) const;
  ag::Var decode(const ag::Var& z) const;
  ag::Var decode_temporal(const ag::Var& z, const TemporalFeature& temporal,
                          GateMode mode = GateMode::learned) const;
  TemporalFeature extract_temporal(const Tensor& warped_prev) const;

  // Tensor-level convenience for inference paths.
  Tensor encode(const Tensor& frame) const;
  Tensor decode(const Tensor& z) const;
  Tensor decode_temporal(const Tensor& z, const TemporalFeature& temporal,
                         GateMode mode = GateMode::learned) const;

  // Copies the trained encoder weights into the frozen temporal encoder.
  void sync_temporal_encoder();

  int temporal_scale_count() const { return 2; }

  void collect_params(nn::ParamMap& m, const std::string& prefix);

 private:
  CodecConfig cfg_;
  double latent_scale_ = 1.0;
  // encoder
  nn::Conv2d enc1_, enc2_, enc3_;
  // decoder
  nn::Conv2d dec_in_, dec_mid_, dec_out_, dec_rgb_;
  Tpm tpm1_, tpm2_;
  // frozen temporal encoder (same shapes as enc1_/enc2_, strides 1 and 2)
  nn::Conv2d tenc1_, tenc2_;
};

}  // namespace streamvsr::codec
