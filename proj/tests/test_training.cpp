// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "oracles.hpp"
#include "streamvsr/training.hpp"

using namespace streamvsr;

TEST_SUITE_BEGIN("training");

namespace {

// Micro fixture: 16x16 frames, 2-frame clips, tiny widths. Fast enough for
// unit tests; the acceptance suite owns the full runs.
model::ModelConfig micro_model() {
  model::ModelConfig m;
  m.codec_w1 = 8;
  m.codec_w2 = 12;
  m.unet_base = 8;
  m.artg_width = 8;
  m.disc_width = 8;
  return m;
}

train::DataSpec micro_data() {
  train::DataSpec d;
  d.train_sequences = 3;
  d.val_sequences = 2;
  d.frames = 3;
  d.height = 16;
  d.width = 16;
  d.max_shift = 1.0;
  return d;
}

train::StageConfig micro_cfg(const train::StageConfig& base, int iters,
                             int warmup = 0) {
  train::StageConfig c = base;
  c.iterations = iters;
  c.batch_size = 2;
  c.lr = 1e-3;
  c.adv_warmup = warmup;
  return c;
}

struct MicroWorld {
  train::Dataset data = train::synth_dataset(micro_data(), 5);
  diffusion::NoiseSchedule sched = diffusion::make_schedule(8, 0.05, 0.45);
  diffusion::TimestepPlan plan = diffusion::rollout_timesteps(8, 4);
  model::ModelBundle bundle = model::ModelBundle::init(micro_model(), 3);
};

}  // namespace

TEST_CASE("stage defaults carry the published loss weights") {
  const auto d = train::default_distill_config();
  CHECK(d.lambda_lpips == 0.5);
  CHECK(d.lambda_gan == 0.025);
  CHECK(d.lr == 5e-5);
  CHECK(d.adam_beta1 == 0.9);
  CHECK(d.adam_beta2 == 0.999);
  CHECK(d.weight_decay == 0.01);
  CHECK(d.adv_warmup == 20000);

  const auto t = train::default_tpm_config();
  CHECK(t.lambda_lpips == 0.3);
  CHECK(t.lambda_flow == 0.1);
  CHECK(t.lambda_gan == 0.025);

  const auto a = train::default_artg_config();
  CHECK(a.lambda_lpips == 0.5);
  CHECK(a.lambda_gan == 0.025);
}

TEST_CASE("AdamW drives a quadratic to its minimum") {
  auto w = ag::Var::leaf(Tensor::full({4}, 5.0), true);
  const Tensor target = Tensor::from({4}, {1.0, -2.0, 0.5, 3.0});
  nn::ParamMap params{{"w", w}};
  train::AdamW opt(0.05, 0.9, 0.999, 0.0);
  for (int i = 0; i < 400; ++i) {
    auto loss = ag::mse(w, ag::Var::constant(target));
    ag::backward(loss);
    opt.step(params);
  }
  CHECK(max_abs_diff(w.val(), target) < 1e-2);
}

TEST_CASE("synthetic dataset is deterministic with LQ at quarter resolution") {
  const auto a = train::synth_dataset(micro_data(), 5);
  const auto b = train::synth_dataset(micro_data(), 5);
  REQUIRE(a.train.size() == 3);
  REQUIRE(a.val.size() == 2);
  CHECK(a.train[0].lq.h() == 4);
  CHECK(a.train[0].lq.w() == 4);
  CHECK(a.train[0].hq.h() == 16);
  CHECK(a.train[0].lq_flows.size() == 2);
  CHECK(a.train[0].hq_flows.size() == 2);
  CHECK(content_hash(a.train[1].hq.frames[2]) ==
        content_hash(b.train[1].hq.frames[2]));
}

TEST_CASE("flow-consistency term is exactly zero on the static fixture") {
  const Tensor frame = Tensor::full({3, 16, 16}, 0.5);
  const Tensor rec = Tensor::full({3, 16, 16}, 0.42);  // constant over time
  const flow::FlowField f(16, 16);
  auto term = train::flow_consistency_term(ag::Var::constant(rec), rec, frame,
                                           frame, f);
  CHECK(term.val().v[0] == 0.0);
}

TEST_CASE("codec pretraining reduces the reconstruction loss") {
  MicroWorld w;
  auto cfg = micro_cfg(train::default_codec_config(), 80);
  cfg.lr = 2e-3;
  auto report = train::pretrain_codec(w.bundle, w.data, cfg);
  CHECK(report.finite());
  // batches are resampled each iteration; compare windowed means
  CHECK(report.final_loss(15) < report.smoothed_loss(7, 15));
  CHECK(w.bundle.has_stage("0codec"));
  // temporal encoder got synced
  auto params = w.bundle.params();
  CHECK(params.at("codec.tenc.c1.w").val().v ==
        params.at("codec.enc.c1.w").val().v);
}

TEST_CASE("distillation demands stage-0 and honors its frozen groups") {
  MicroWorld w;
  CHECK_THROWS_AS(train::distill_rollout(
                      w.bundle, w.data, w.sched, w.plan,
                      micro_cfg(train::default_distill_config(), 2)),
                  DependencyError);

  train::pretrain_codec(w.bundle, w.data,
                        micro_cfg(train::default_codec_config(), 10));
  train::pretrain_teacher(w.bundle, w.data, w.sched,
                          micro_cfg(train::default_teacher_config(), 10));

  auto params = w.bundle.params();
  const auto codec_before = nn::group_hash(params, "codec");
  const auto artg_before = nn::group_hash(params, "artg");
  const auto disc_before = nn::group_hash(params, "disc");
  const auto unet_before = nn::group_hash(params, "unet");

  train::LossGraphProbe probe;
  auto report = train::distill_rollout(
      w.bundle, w.data, w.sched, w.plan,
      micro_cfg(train::default_distill_config(), 3, /*warmup=*/100), &probe);
  CHECK(report.finite());

  params = w.bundle.params();
  CHECK(nn::group_hash(params, "codec") == codec_before);
  CHECK(nn::group_hash(params, "artg") == artg_before);
  CHECK(nn::group_hash(params, "disc") == disc_before);  // before warmup
  CHECK(nn::group_hash(params, "unet") != unet_before);

  // supervision only on the final rollout latent
  REQUIRE(probe.step_tags.size() == 4);
  CHECK(probe.step_tags.back() == "rollout/final");
  for (std::size_t i = 0; i + 1 < probe.step_tags.size(); ++i)
    CHECK(probe.step_tags[i] == "rollout/step_" + std::to_string(i));
  REQUIRE(!probe.terms.empty());
  for (const auto& term : probe.terms) CHECK(term.input_tag == "rollout/final");

  // adversarial contribution is exactly zero before warmup
  for (const auto& it : report.iters) CHECK(it.gan == 0.0);
}

TEST_CASE("random-timestep baseline makes one U-Net call per sample") {
  MicroWorld w;
  train::pretrain_codec(w.bundle, w.data,
                        micro_cfg(train::default_codec_config(), 5));
  train::pretrain_teacher(w.bundle, w.data, w.sched,
                          micro_cfg(train::default_teacher_config(), 5));

  auto cfg = micro_cfg(train::default_distill_random_config(), 3, 100);
  const auto before = w.bundle.unet.forward_count;
  train::distill_random_timestep(w.bundle, w.data, w.sched, w.plan, cfg);
  const auto calls_random = w.bundle.unet.forward_count - before;
  CHECK(calls_random ==
        static_cast<std::uint64_t>(cfg.iterations * cfg.batch_size));

  const auto before2 = w.bundle.unet.forward_count;
  train::distill_rollout(w.bundle, w.data, w.sched, w.plan, cfg);
  const auto calls_rollout = w.bundle.unet.forward_count - before2;
  CHECK(calls_rollout == static_cast<std::uint64_t>(cfg.iterations *
                                                    cfg.batch_size * w.plan.k()));
}

TEST_CASE("TPM stage freezes everything except the fusion modules") {
  MicroWorld w;
  train::pretrain_codec(w.bundle, w.data,
                        micro_cfg(train::default_codec_config(), 10));
  auto params = w.bundle.params();
  const auto enc_before = nn::group_hash(params, "codec.enc");
  const auto dec_before = nn::group_hash(params, "codec.dec");
  const auto tenc_before = nn::group_hash(params, "codec.tenc");
  const auto tpm_before = nn::group_hash(params, "codec.tpm");
  const auto unet_before = nn::group_hash(params, "unet");

  auto report = train::train_tpm(w.bundle, w.data,
                                 micro_cfg(train::default_tpm_config(), 4, 100));
  CHECK(report.finite());
  CHECK(w.bundle.has_stage("2"));

  params = w.bundle.params();
  CHECK(nn::group_hash(params, "codec.enc") == enc_before);
  CHECK(nn::group_hash(params, "codec.dec") == dec_before);
  CHECK(nn::group_hash(params, "codec.tenc") == tenc_before);
  CHECK(nn::group_hash(params, "unet") == unet_before);
  CHECK(nn::group_hash(params, "codec.tpm") != tpm_before);
  // flow component tracked
  CHECK(report.iters.front().flow >= 0.0);
}

TEST_CASE("ARTG stage updates only the guidance module") {
  MicroWorld w;
  train::pretrain_codec(w.bundle, w.data,
                        micro_cfg(train::default_codec_config(), 10));
  train::pretrain_teacher(w.bundle, w.data, w.sched,
                          micro_cfg(train::default_teacher_config(), 5));

  CHECK_THROWS_AS(train::train_artg(w.bundle, w.data, w.sched, w.plan,
                                    micro_cfg(train::default_artg_config(), 2)),
                  DependencyError);

  train::distill_rollout(w.bundle, w.data, w.sched, w.plan,
                         micro_cfg(train::default_distill_config(), 3, 100));
  train::train_tpm(w.bundle, w.data,
                   micro_cfg(train::default_tpm_config(), 3, 100));

  auto params = w.bundle.params();
  const auto unet_before = nn::group_hash(params, "unet");
  const auto dec_before = nn::group_hash(params, "codec.dec");
  const auto tpm_before = nn::group_hash(params, "codec.tpm");
  const auto disc_before = nn::group_hash(params, "disc");
  const auto artg_before = nn::group_hash(params, "artg");

  auto report = train::train_artg(w.bundle, w.data, w.sched, w.plan,
                                  micro_cfg(train::default_artg_config(), 4, 2));
  CHECK(report.finite());

  params = w.bundle.params();
  CHECK(nn::group_hash(params, "unet") == unet_before);
  CHECK(nn::group_hash(params, "codec.dec") == dec_before);
  CHECK(nn::group_hash(params, "codec.tpm") == tpm_before);
  CHECK(nn::group_hash(params, "disc") == disc_before);
  CHECK(nn::group_hash(params, "artg") != artg_before);
}

TEST_CASE("stage matrix produces one populated row per combo") {
  MicroWorld w;
  train::pretrain_codec(w.bundle, w.data,
                        micro_cfg(train::default_codec_config(), 8));
  train::pretrain_teacher(w.bundle, w.data, w.sched,
                          micro_cfg(train::default_teacher_config(), 4));
  std::map<std::string, train::StageConfig> cfgs = {
      {"distill", micro_cfg(train::default_distill_config(), 2, 100)},
      {"tpm", micro_cfg(train::default_tpm_config(), 2, 100)},
      {"artg", micro_cfg(train::default_artg_config(), 2, 100)},
  };
  const auto rows = train::run_stage_matrix(
      w.bundle, w.data, w.sched, w.plan, cfgs,
      {"1+2", "1+3", "2+3", "joint", "separate"});
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    CHECK(std::isfinite(row.metrics.psnr));
    CHECK(std::isfinite(row.metrics.tlp));
    CHECK(std::isfinite(row.metrics.warp_err));
    CHECK(row.metrics.psnr > 0.0);
    if (row.combo == "joint")
      CHECK_FALSE(row.any_frozen_during_training);
    else
      CHECK(row.any_frozen_during_training);
  }
}

TEST_CASE("exploding updates abort with a divergence error") {
  MicroWorld w;
  train::pretrain_codec(w.bundle, w.data,
                        micro_cfg(train::default_codec_config(), 2));
  train::pretrain_teacher(w.bundle, w.data, w.sched,
                          micro_cfg(train::default_teacher_config(), 2));
  auto cfg = micro_cfg(train::default_distill_config(), 50, 1000);
  cfg.lr = 1e18;  // guaranteed blow-up
  CHECK_THROWS_AS(
      train::distill_rollout(w.bundle, w.data, w.sched, w.plan, cfg),
      NumericDivergenceError);
}

TEST_SUITE_END();
