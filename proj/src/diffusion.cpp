// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/diffusion.hpp"

#include <cmath>

#include "streamvsr/errors.hpp"
#include "streamvsr/rng.hpp"

namespace streamvsr::diffusion {

NoiseSchedule make_schedule(int t_total, double beta_min, double beta_max,
                            Spacing spacing) {
  if (t_total < 1) throw ArgumentError("make_schedule: T must be >= 1");
  if (!(0.0 < beta_min && beta_min <= beta_max && beta_max < 1.0))
    throw ArgumentError("make_schedule: need 0 < beta_min <= beta_max < 1");
  (void)spacing;  // only linear spacing exists
  NoiseSchedule s;
  s.t_total = t_total;
  s.beta.resize(t_total);
  s.alpha_bar.resize(t_total);
  double prod = 1.0;
  for (int t = 0; t < t_total; ++t) {
    const double b =
        t_total == 1
            ? beta_min
            : beta_min + (beta_max - beta_min) * t / (t_total - 1.0);
    s.beta[t] = b;
    prod *= 1.0 - b;
    s.alpha_bar[t] = prod;
  }
  return s;
}

TimestepPlan rollout_timesteps(int t_total, int k) {
  if (k < 1) throw ArgumentError("rollout_timesteps: K must be >= 1");
  if (t_total < k) throw ArgumentError("rollout_timesteps: need T >= K");
  if (t_total % k != 0)
    throw ArgumentError("rollout_timesteps: T must be divisible by K");
  TimestepPlan plan;
  const int stride = t_total / k;
  for (int j = 0; j < k; ++j) plan.steps.push_back(t_total - 1 - j * stride);
  return plan;
}

namespace {

void check_t(int t, const NoiseSchedule& sched, const char* who) {
  if (t < 0 || t >= sched.t_total)
    throw ArgumentError(std::string(who) + ": timestep out of range");
}

// Coefficients of the deterministic update z' = c_z * z + c_e * eps_hat.
struct DdimCoeffs {
  double c_z, c_e;
};

DdimCoeffs ddim_coeffs(int t, int t_prev, const NoiseSchedule& sched) {
  check_t(t, sched, "ddim_step");
  if (t_prev != kFinalStep) {
    check_t(t_prev, sched, "ddim_step (t_prev)");
    if (t_prev >= t) throw ArgumentError("ddim_step: t_prev must be < t");
  }
  const double abar_t = sched.alpha_bar[t];
  if (abar_t <= 0.0) throw SingularityError("ddim_step: alpha_bar[t] == 0");
  const double sa_t = std::sqrt(abar_t);
  const double sb_t = std::sqrt(1.0 - abar_t);
  // x0_hat = (z - sb_t * eps) / sa_t, then renoise to t_prev (or stop).
  if (t_prev == kFinalStep) return {1.0 / sa_t, -sb_t / sa_t};
  const double abar_p = sched.alpha_bar[t_prev];
  const double sa_p = std::sqrt(abar_p);
  const double sb_p = std::sqrt(1.0 - abar_p);
  return {sa_p / sa_t, sb_p - sa_p * sb_t / sa_t};
}

}  // namespace

Tensor add_noise(const Tensor& z0, const Tensor& eps, int t,
                 const NoiseSchedule& sched) {
  check_t(t, sched, "add_noise");
  if (!z0.same_shape(eps)) throw DimensionError("add_noise: shape mismatch");
  const double sa = std::sqrt(sched.alpha_bar[t]);
  const double sb = std::sqrt(1.0 - sched.alpha_bar[t]);
  Tensor out = z0 * sa;
  axpy(out, sb, eps);
  return out;
}

ag::Var add_noise(const ag::Var& z0, const ag::Var& eps, int t,
                  const NoiseSchedule& sched) {
  check_t(t, sched, "add_noise");
  const double sa = std::sqrt(sched.alpha_bar[t]);
  const double sb = std::sqrt(1.0 - sched.alpha_bar[t]);
  return ag::add(ag::scale(z0, sa), ag::scale(eps, sb));
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, int t_prev,
                 const NoiseSchedule& sched) {
  if (!z_t.same_shape(eps_hat)) throw DimensionError("ddim_step: shape mismatch");
  const auto [c_z, c_e] = ddim_coeffs(t, t_prev, sched);
  Tensor out = z_t * c_z;
  axpy(out, c_e, eps_hat);
  return out;
}

ag::Var ddim_step(const ag::Var& z_t, const ag::Var& eps_hat, int t, int t_prev,
                  const NoiseSchedule& sched) {
  const auto [c_z, c_e] = ddim_coeffs(t, t_prev, sched);
  return ag::add(ag::scale(z_t, c_z), ag::scale(eps_hat, c_e));
}

LatentState prepare_latents(const Tensor& lq, const NoiseSchedule& sched,
                            std::uint64_t seed, int latent_channels) {
  if (lq.dims.size() != 3)
    throw DimensionError("prepare_latents: LQ frame must be {3,h,w}");
  Rng rng(seed);
  LatentState st;
  st.z = Tensor::randn({latent_channels, lq.h(), lq.w()}, rng);
  st.t = sched.t_total - 1;
  st.cond = lq;
  return st;
}

}  // namespace streamvsr::diffusion
