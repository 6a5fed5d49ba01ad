// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/denoiser.hpp"

#include "streamvsr/errors.hpp"

namespace streamvsr::denoise {

UNet::UNet(const UNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int cin = cfg.latent_channels + cfg.cond_channels +
                  (cfg.concat_warped ? 3 : 0);
  const int b = cfg.base;
  in_ = nn::Conv2d(cin, b, 3, 1, 1, rng);
  down_ = nn::Conv2d(b, 2 * b, 3, 2, 1, rng);
  mid_ = nn::Conv2d(2 * b, 2 * b, 3, 1, 1, rng);
  up_ = nn::Conv2d(2 * b, b, 3, 1, 1, rng);
  merge_ = nn::Conv2d(2 * b, b, 3, 1, 1, rng);
  out_ = nn::Conv2d(b, cfg.latent_channels, 3, 1, 1, rng);
  temb1_ = nn::Linear(cfg.temb_dim, cfg.temb_dim, rng);
  temb2_ = nn::Linear(cfg.temb_dim, cfg.temb_dim, rng);
  proj_in_ = nn::Linear(cfg.temb_dim, b, rng);
  proj_down_ = nn::Linear(cfg.temb_dim, 2 * b, rng);
  proj_mid_ = nn::Linear(cfg.temb_dim, 2 * b, rng);
  proj_up_ = nn::Linear(cfg.temb_dim, b, rng);
  proj_merge_ = nn::Linear(cfg.temb_dim, b, rng);
}

ag::Var UNet::forward(const ag::Var& z, const ag::Var& cond, int t,
                      const ag::Var* warped_ds) const {
  const Tensor& zt = z.val();
  const Tensor& ct = cond.val();
  if (zt.dims.size() != 3 || zt.c() != cfg_.latent_channels)
    throw DimensionError("predict_noise: bad latent shape " + zt.shape_str());
  if (ct.dims.size() != 3 || ct.c() != cfg_.cond_channels ||
      ct.h() != zt.h() || ct.w() != zt.w())
    throw DimensionError("predict_noise: conditioning shape mismatch");
  if (cfg_.concat_warped && warped_ds == nullptr)
    throw ArgumentError("predict_noise: concat_warped needs warped input");
  if (zt.h() % 2 != 0 || zt.w() % 2 != 0)
    throw DimensionError("predict_noise: latent dims must be even");
  ++forward_count;

  auto temb = ag::silu(temb1_(ag::Var::constant(
      nn::sin_time_embedding(t, cfg_.temb_dim))));
  temb = temb2_(temb);

  auto x = ag::concat_c(z, cond);
  if (cfg_.concat_warped) x = ag::concat_c(x, *warped_ds);

  auto h0 = ag::silu(ag::add_channel_bias(in_(x), proj_in_(temb)));
  auto h1 = ag::silu(ag::add_channel_bias(down_(h0), proj_down_(temb)));
  auto hm = ag::silu(ag::add_channel_bias(mid_(h1), proj_mid_(temb)));
  auto hu = ag::silu(ag::add_channel_bias(up_(ag::upsample2(hm)), proj_up_(temb)));
  auto hc = ag::silu(
      ag::add_channel_bias(merge_(ag::concat_c(hu, h0)), proj_merge_(temb)));
  return out_(hc);
}

Tensor UNet::predict_noise(const Tensor& z, int t, const Tensor& cond,
                           const Tensor* warped_ds) const {
  ag::Var wv;
  if (warped_ds) wv = ag::Var::constant(*warped_ds);
  return forward(ag::Var::constant(z), ag::Var::constant(cond), t,
                 warped_ds ? &wv : nullptr)
      .val();
}

void UNet::collect_params(nn::ParamMap& m, const std::string& prefix) {
  in_.collect(m, prefix + ".in");
  down_.collect(m, prefix + ".down");
  mid_.collect(m, prefix + ".mid");
  up_.collect(m, prefix + ".up");
  merge_.collect(m, prefix + ".merge");
  out_.collect(m, prefix + ".out");
  temb1_.collect(m, prefix + ".temb1");
  temb2_.collect(m, prefix + ".temb2");
  proj_in_.collect(m, prefix + ".proj_in");
  proj_down_.collect(m, prefix + ".proj_down");
  proj_mid_.collect(m, prefix + ".proj_mid");
  proj_up_.collect(m, prefix + ".proj_up");
  proj_merge_.collect(m, prefix + ".proj_merge");
}

Artg::Artg(int width, int latent_channels, Rng& rng)
    : c1_(latent_channels + 3, width, 3, 1, 1, rng),
      c2_(width, width, 3, 1, 1, rng),
      c3_(width, latent_channels, 3, 1, 1, rng, /*init_gain=*/0.0) {}

ag::Var Artg::inject(const ag::Var& z, const ag::Var& warped_prev_hq) const {
  const Tensor& zt = z.val();
  const Tensor& wt = warped_prev_hq.val();
  if (wt.dims.size() != 3 || wt.c() != 3 || wt.h() != 4 * zt.h() ||
      wt.w() != 4 * zt.w())
    throw DimensionError("artg_inject: warped frame must be 4x latent dims");
  auto down = ag::avgpool(warped_prev_hq, 4);
  auto h = ag::silu(c1_(ag::concat_c(z, down)));
  h = ag::silu(c2_(h));
  return ag::add(z, c3_(h));
}

Tensor Artg::inject(const Tensor& z, const Tensor& warped_prev_hq) const {
  return inject(ag::Var::constant(z), ag::Var::constant(warped_prev_hq)).val();
}

void Artg::collect_params(nn::ParamMap& m, const std::string& prefix) {
  c1_.collect(m, prefix + ".c1");
  c2_.collect(m, prefix + ".c2");
  c3_.collect(m, prefix + ".c3");
}

ag::Var denoise_rollout(const ag::Var& z_start,
                        const diffusion::TimestepPlan& plan,
                        const diffusion::NoiseSchedule& sched,
                        const RolloutHooks& hooks,
                        std::vector<ag::Var>* steps_out) {
  if (plan.steps.empty()) throw ArgumentError("denoise_rollout: empty plan");
  if (plan.steps.front() != sched.t_total - 1)
    throw ArgumentError("denoise_rollout: plan does not start at T-1");
  ag::Var z = z_start;
  const int k = plan.k();
  for (int j = 0; j < k; ++j) {
    const int t = plan.steps[j];
    const int t_prev = j + 1 < k ? plan.steps[j + 1] : diffusion::kFinalStep;
    if (hooks.inject) z = hooks.inject(z);
    auto eps_hat = hooks.predict(z, t);
    z = diffusion::ddim_step(z, eps_hat, t, t_prev, sched);
    z.set_tag(j + 1 < k ? "rollout/step_" + std::to_string(j)
                        : "rollout/final");
    if (steps_out) steps_out->push_back(z);
  }
  return z;
}

Tensor denoise_rollout(const diffusion::LatentState& state,
                       const diffusion::TimestepPlan& plan,
                       const diffusion::NoiseSchedule& sched, const UNet& unet,
                       const Artg* artg, const Tensor* warped_prev_hq) {
  auto cond = ag::Var::constant(state.cond);
  ag::Var warped;
  if (warped_prev_hq) warped = ag::Var::constant(*warped_prev_hq);
  // Extra U-Net input channels (when configured) take the warped frame at
  // latent resolution; zeros on the first frame of a stream.
  ag::Var warped_ds;
  if (unet.config().concat_warped) {
    warped_ds = warped_prev_hq
                    ? ag::avgpool(warped, 4)
                    : ag::Var::constant(
                          Tensor({3, state.z.h(), state.z.w()}));
  }
  RolloutHooks hooks;
  hooks.predict = [&](const ag::Var& z, int t) {
    return unet.forward(z, cond, t,
                        unet.config().concat_warped ? &warped_ds : nullptr);
  };
  if (artg && warped_prev_hq)
    hooks.inject = [&](const ag::Var& z) { return artg->inject(z, warped); };
  return denoise_rollout(ag::Var::constant(state.z), plan, sched, hooks, nullptr)
      .val();
}

}  // namespace streamvsr::denoise
