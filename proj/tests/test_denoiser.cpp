// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "oracles.hpp"
#include "streamvsr/denoiser.hpp"

using namespace streamvsr;
namespace diff = streamvsr::diffusion;

TEST_SUITE_BEGIN("denoiser");

namespace {

denoise::UNet make_unet(bool concat_warped = false, std::uint64_t seed = 71) {
  denoise::UNetConfig cfg;
  cfg.base = 16;
  cfg.concat_warped = concat_warped;
  Rng rng(seed);
  return denoise::UNet(cfg, rng);
}

}  // namespace

TEST_CASE("predict_noise keeps the latent shape and is deterministic") {
  auto unet = make_unet();
  Rng rng(72);
  const Tensor z = Tensor::randn({4, 8, 8}, rng);
  const Tensor cond = Tensor::full({3, 8, 8}, 0.5);
  const Tensor a = unet.predict_noise(z, 5, cond);
  const Tensor b = unet.predict_noise(z, 5, cond);
  CHECK(a.dims == z.dims);
  CHECK(a.v == b.v);
  for (double v : a.v) CHECK(std::isfinite(v));
  // different timesteps actually reach the network
  const Tensor c = unet.predict_noise(z, 6, cond);
  CHECK(a.v != c.v);
}

TEST_CASE("predict_noise validates shapes") {
  auto unet = make_unet();
  Rng rng(73);
  const Tensor z = Tensor::randn({4, 8, 8}, rng);
  CHECK_THROWS_AS(unet.predict_noise(z, 0, Tensor::full({3, 4, 4}, 0.5)),
                  DimensionError);
  CHECK_THROWS_AS(unet.predict_noise(Tensor::randn({2, 8, 8}, rng), 0,
                                     Tensor::full({3, 8, 8}, 0.5)),
                  DimensionError);
}

TEST_CASE("fresh ARTG is the exact identity on latents") {
  Rng rng(74);
  denoise::Artg artg(8, 4, rng);
  const Tensor z = Tensor::randn({4, 8, 8}, rng);
  const Tensor warped = Tensor::full({3, 32, 32}, 0.3);
  const Tensor out = artg.inject(z, warped);
  CHECK(out.v == z.v);
}

TEST_CASE("artg_inject rejects mismatched frames") {
  Rng rng(75);
  denoise::Artg artg(8, 4, rng);
  const Tensor z = Tensor::randn({4, 8, 8}, rng);
  CHECK_THROWS_AS(artg.inject(z, Tensor::full({3, 16, 16}, 0.3)),
                  DimensionError);
}

TEST_CASE("rollout makes exactly K noise predictions and injects every step") {
  auto unet = make_unet();
  Rng rng(76);
  const auto sched = diff::make_schedule(8, 0.05, 0.4);
  const Tensor lq = Tensor::full({3, 8, 8}, 0.5);
  auto state = diff::prepare_latents(lq, sched, 7);

  for (int k : {1, 4}) {
    const auto plan = diff::rollout_timesteps(8, k);
    const auto before = unet.forward_count;
    (void)denoise::denoise_rollout(state, plan, sched, unet, nullptr, nullptr);
    CHECK(unet.forward_count - before == static_cast<std::uint64_t>(k));
  }

  // injection hook runs once per step when a previous frame exists
  int injections = 0;
  denoise::RolloutHooks hooks;
  auto cond = ag::Var::constant(lq);
  hooks.predict = [&](const ag::Var& z, int t) {
    return unet.forward(z, cond, t);
  };
  hooks.inject = [&](const ag::Var& z) {
    ++injections;
    return z;
  };
  const auto plan = diff::rollout_timesteps(8, 4);
  (void)denoise::denoise_rollout(ag::Var::constant(state.z), plan, sched,
                                 hooks, nullptr);
  CHECK(injections == 4);
}

TEST_CASE("an oracle noise stub recovers the clean latent") {
  const auto sched = diff::make_schedule(64, 1e-4, 0.3);
  const auto plan = diff::rollout_timesteps(64, 4);
  Rng rng(77);
  const Tensor z0 = Tensor::randn({4, 8, 8}, rng);
  const Tensor eps = Tensor::randn({4, 8, 8}, rng);
  const Tensor z_start = diff::add_noise(z0, eps, 63, sched);
  denoise::RolloutHooks hooks;
  hooks.predict = [&](const ag::Var&, int) { return ag::Var::constant(eps); };
  const auto out =
      denoise::denoise_rollout(ag::Var::constant(z_start), plan, sched, hooks,
                               nullptr);
  CHECK(max_abs_diff(out.val(), z0) < 1e-5);
}

TEST_CASE("rollout rejects plans that do not start at T-1") {
  const auto sched = diff::make_schedule(8, 0.05, 0.4);
  diff::TimestepPlan bad;
  bad.steps = {5, 3};
  denoise::RolloutHooks hooks;
  hooks.predict = [](const ag::Var& z, int) { return z; };
  CHECK_THROWS_AS(denoise::denoise_rollout(
                      ag::Var::constant(Tensor::zeros({4, 4, 4})), bad, sched,
                      hooks, nullptr),
                  ArgumentError);
}

TEST_CASE("gradient flows through every rollout step (probe)") {
  auto unet = make_unet(false, 78);
  const auto sched = diff::make_schedule(8, 0.05, 0.4);
  const auto plan = diff::rollout_timesteps(8, 4);
  Rng rng(79);
  const Tensor z0 = Tensor::randn({4, 4, 4}, rng);
  const Tensor eps = Tensor::randn({4, 4, 4}, rng);
  const Tensor z_start = diff::add_noise(z0, eps, 7, sched);
  const Tensor lq = Tensor::full({3, 4, 4}, 0.5);
  auto cond = ag::Var::constant(lq);

  // Additive probe on the step-0 output; its gradient must be nonzero and
  // match central differences through the remaining K-1 steps.
  auto probe = ag::Var::leaf(Tensor::zeros({4, 4, 4}), true);
  auto loss_fn = [&] {
    denoise::RolloutHooks hooks;
    int step = 0;
    hooks.predict = [&](const ag::Var& z, int t) {
      return unet.forward(z, cond, t);
    };
    hooks.inject = [&](const ag::Var& z) {
      return step++ == 1 ? ag::add(z, probe) : z;  // after step 0's update
    };
    auto z_den = denoise::denoise_rollout(ag::Var::constant(z_start), plan,
                                          sched, hooks, nullptr);
    return ag::mse(z_den, ag::Var::constant(z0));
  };
  Rng coord_rng(80);
  std::vector<int> coords;
  for (int i = 0; i < 8; ++i)
    coords.push_back(static_cast<int>(coord_rng.below(probe.val().numel())));
  CHECK(oracles::fd_max_rel_err(loss_fn, probe, coords) < 1e-3);
  probe.zero_grad();
  auto loss = loss_fn();
  ag::backward(loss);
  double grad_norm = 0;
  for (double g : probe.grad().v) grad_norm += g * g;
  CHECK(grad_norm > 0.0);
}

TEST_CASE("denoiser parameter gradients match finite differences") {
  auto unet = make_unet(false, 81);
  const auto sched = diff::make_schedule(8, 0.05, 0.4);
  const auto plan = diff::rollout_timesteps(8, 2);
  Rng rng(82);
  const Tensor z0 = Tensor::randn({4, 4, 4}, rng);
  const Tensor eps = Tensor::randn({4, 4, 4}, rng);
  const Tensor z_start = diff::add_noise(z0, eps, 7, sched);
  auto cond = ag::Var::constant(Tensor::full({3, 4, 4}, 0.5));
  nn::ParamMap params;
  unet.collect_params(params, "unet");
  auto loss_fn = [&] {
    denoise::RolloutHooks hooks;
    hooks.predict = [&](const ag::Var& z, int t) {
      return unet.forward(z, cond, t);
    };
    auto z_den = denoise::denoise_rollout(ag::Var::constant(z_start), plan,
                                          sched, hooks, nullptr);
    return ag::mse(z_den, ag::Var::constant(z0));
  };
  Rng coord_rng(83);
  for (const char* pname : {"unet.mid.w", "unet.in.w", "unet.proj_mid.w"}) {
    auto p = params.at(pname);
    std::vector<int> coords;
    for (int i = 0; i < 6; ++i)
      coords.push_back(static_cast<int>(coord_rng.below(p.val().numel())));
    CHECK(oracles::fd_max_rel_err(loss_fn, p, coords) < 1e-3);
  }
}

TEST_CASE("concat-conditioning variant consumes the warped frame") {
  auto unet = make_unet(true, 84);
  Rng rng(85);
  const Tensor z = Tensor::randn({4, 8, 8}, rng);
  const Tensor cond = Tensor::full({3, 8, 8}, 0.5);
  const Tensor warped_a = Tensor::full({3, 8, 8}, 0.2);
  const Tensor warped_b = Tensor::full({3, 8, 8}, 0.8);
  const Tensor a = unet.predict_noise(z, 3, cond, &warped_a);
  const Tensor b = unet.predict_noise(z, 3, cond, &warped_b);
  CHECK(a.dims == z.dims);
  CHECK(a.v != b.v);
  CHECK_THROWS_AS(unet.predict_noise(z, 3, cond), ArgumentError);
}

TEST_SUITE_END();
