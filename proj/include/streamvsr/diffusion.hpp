// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "streamvsr/autograd.hpp"
#include "streamvsr/tensor.hpp"

namespace streamvsr::diffusion {

enum class Spacing { linear };

// beta / cumulative alpha tables. alpha_bar[t] = prod_{i<=t} (1 - beta[i]).
struct NoiseSchedule {
  int t_total = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;
};

NoiseSchedule make_schedule(int t_total, double beta_min = 1e-4,
                            double beta_max = 2e-2,
                            Spacing spacing = Spacing::linear);

// Strictly decreasing K timesteps starting at T-1 with stride T/K.
struct TimestepPlan {
  std::vector<int> steps;
  int k() const { return static_cast<int>(steps.size()); }
};

TimestepPlan rollout_timesteps(int t_total, int k);

// Sentinel for the terminal update that returns the clean-sample estimate.
inline constexpr int kFinalStep = -1;

// sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps.
Tensor add_noise(const Tensor& z0, const Tensor& eps, int t,
                 const NoiseSchedule& sched);
ag::Var add_noise(const ag::Var& z0, const ag::Var& eps, int t,
                  const NoiseSchedule& sched);

// Deterministic DDIM update (eta = 0): reconstructs x0_hat from the noise
// prediction and re-noises to t_prev, or returns x0_hat when t_prev is
// kFinalStep.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, int t_prev,
                 const NoiseSchedule& sched);
ag::Var ddim_step(const ag::Var& z_t, const ag::Var& eps_hat, int t, int t_prev,
                  const NoiseSchedule& sched);

// Latent at one-quarter target resolution plus the LQ conditioning frame.
struct LatentState {
  Tensor z;     // {C_z, h, w}
  int t = 0;    // current timestep index
  Tensor cond;  // {3, h, w}, kept in [0,1]
};

// Seeded standard-normal latent at t = T-1; cond is the LQ frame itself.
LatentState prepare_latents(const Tensor& lq, const NoiseSchedule& sched,
                            std::uint64_t seed, int latent_channels = 4);

}  // namespace streamvsr::diffusion
