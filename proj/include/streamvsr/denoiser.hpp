// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "streamvsr/diffusion.hpp"
#include "streamvsr/nn.hpp"

namespace streamvsr::denoise {

struct UNetConfig {
  int latent_channels = 4;
  int cond_channels = 3;
  int base = 32;       // widths {base, 2*base}
  int temb_dim = 64;
  // When true the warped previous frame (at latent resolution) is appended
  // to the U-Net input alongside the LQ conditioning.
  bool concat_warped = false;
};

// Two-level conditional U-Net with skip connection and sinusoidal timestep
// embedding added as a per-channel bias in every block.
class UNet {
 public:
  UNet() = default;
  UNet(const UNetConfig& cfg, Rng& rng);

  const UNetConfig& config() const { return cfg_; }

  // z {C_z,h,w}, cond {3,h,w}; warped_ds {3,h,w} required iff concat_warped.
  ag::Var forward(const ag::Var& z, const ag::Var& cond, int t,
                  const ag::Var* warped_ds = nullptr) const;

  Tensor predict_noise(const Tensor& z, int t, const Tensor& cond,
                       const Tensor* warped_ds = nullptr) const;

  void collect_params(nn::ParamMap& m, const std::string& prefix);

  mutable std::uint64_t forward_count = 0;  // test instrumentation

 private:
  UNetConfig cfg_;
  nn::Conv2d in_, down_, mid_, up_, merge_, out_;
  nn::Linear temb1_, temb2_;
  nn::Linear proj_in_, proj_down_, proj_mid_, proj_up_, proj_merge_;
};

// Residual latent injection conditioned on the warped previous HQ output.
// The frame is average-pooled x4 to latent resolution inside. The final
// conv is zero-initialized, so a fresh module is the exact identity.
class Artg {
 public:
  Artg() = default;
  Artg(int width, int latent_channels, Rng& rng);

  ag::Var inject(const ag::Var& z, const ag::Var& warped_prev_hq) const;
  Tensor inject(const Tensor& z, const Tensor& warped_prev_hq) const;

  void collect_params(nn::ParamMap& m, const std::string& prefix);

 private:
  nn::Conv2d c1_, c2_, c3_;
};

// One denoising trajectory over the plan: per step, optional ARTG
// injection, noise prediction, DDIM update. Returns the final clean latent;
// `steps_out` receives every intermediate latent (tagged rollout/step_j,
// final one rollout/final).
struct RolloutHooks {
  std::function<ag::Var(const ag::Var& z, int t)> predict;
  std::function<ag::Var(const ag::Var& z)> inject;  // may be empty
};

ag::Var denoise_rollout(const ag::Var& z_start,
                        const diffusion::TimestepPlan& plan,
                        const diffusion::NoiseSchedule& sched,
                        const RolloutHooks& hooks,
                        std::vector<ag::Var>* steps_out = nullptr);

// Model-backed convenience used by inference.
Tensor denoise_rollout(const diffusion::LatentState& state,
                       const diffusion::TimestepPlan& plan,
                       const diffusion::NoiseSchedule& sched, const UNet& unet,
                       const Artg* artg, const Tensor* warped_prev_hq);

}  // namespace streamvsr::denoise
