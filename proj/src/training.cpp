// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/training.hpp"

#include <chrono>
#include <cmath>

#include "streamvsr/errors.hpp"
#include "streamvsr/perceptual.hpp"

namespace streamvsr::train {

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void guard_finite(double x, const std::string& stage, int iter) {
  if (!std::isfinite(x))
    throw NumericDivergenceError("stage " + stage + ": non-finite loss at iteration " +
                                 std::to_string(iter));
}

StageConfig base_config(const std::string& stage) {
  StageConfig c;
  c.stage = stage;
  return c;
}

}  // namespace

StageConfig default_codec_config() {
  StageConfig c = base_config("codec");
  c.lambda_lpips = 0.0;
  c.lambda_gan = 0.0;
  return c;
}

StageConfig default_teacher_config() {
  StageConfig c = base_config("teacher");
  c.lambda_lpips = 0.0;
  c.lambda_gan = 0.0;
  return c;
}

StageConfig default_distill_config() {
  StageConfig c = base_config("distill");
  c.lambda_lpips = 0.5;
  c.lambda_gan = 0.025;
  return c;
}

StageConfig default_distill_random_config() {
  StageConfig c = default_distill_config();
  c.stage = "distill-random";
  return c;
}

StageConfig default_tpm_config() {
  StageConfig c = base_config("tpm");
  c.lambda_lpips = 0.3;
  c.lambda_flow = 0.1;
  c.lambda_gan = 0.025;
  return c;
}

StageConfig default_artg_config() {
  StageConfig c = base_config("artg");
  c.lambda_lpips = 0.5;
  c.lambda_gan = 0.025;
  return c;
}

bool TrainReport::finite() const {
  for (const auto& r : iters)
    if (!std::isfinite(r.total) || !std::isfinite(r.rec) ||
        !std::isfinite(r.lpips) || !std::isfinite(r.gan) ||
        !std::isfinite(r.flow))
      return false;
  return true;
}

double TrainReport::smoothed_loss(int center, int window) const {
  if (iters.empty()) return 0.0;
  const int last = static_cast<int>(iters.size()) - 1;
  center = std::clamp(center, 0, last);
  const int lo = std::max(0, center - window / 2);
  const int hi = std::min(last, center + window / 2);
  double acc = 0.0;
  for (int i = lo; i <= hi; ++i) acc += iters[i].total;
  return acc / (hi - lo + 1);
}

double TrainReport::final_loss(int window) const {
  return smoothed_loss(static_cast<int>(iters.size()) - 1, window);
}

AdamW::AdamW(double lr, double beta1, double beta2, double weight_decay)
    : lr_(lr), b1_(beta1), b2_(beta2), wd_(weight_decay) {}

void AdamW::step(nn::ParamMap& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, t_);
  const double bc2 = 1.0 - std::pow(b2_, t_);
  constexpr double kEps = 1e-8;
  for (auto& [name, var] : params) {
    if (!var.requires_grad()) continue;
    auto& slot = slots_[name];
    if (!slot.m.defined()) {
      slot.m = Tensor::zeros(var.val().dims);
      slot.v = Tensor::zeros(var.val().dims);
    }
    Tensor& w = var.val();
    const Tensor& g = var.grad();
    for (std::size_t i = 0; i < w.v.size(); ++i) {
      const double gi = g.v[i];
      slot.m.v[i] = b1_ * slot.m.v[i] + (1.0 - b1_) * gi;
      slot.v.v[i] = b2_ * slot.v.v[i] + (1.0 - b2_) * gi * gi;
      const double mhat = slot.m.v[i] / bc1;
      const double vhat = slot.v.v[i] / bc2;
      w.v[i] -= lr_ * (mhat / (std::sqrt(vhat) + kEps) + wd_ * w.v[i]);
    }
    var.zero_grad();
  }
}

void AdamW::zero_grad(nn::ParamMap& params) {
  for (auto& [name, var] : params) var.zero_grad();
}

Dataset synth_dataset(const DataSpec& spec, std::uint64_t seed) {
  Dataset d;
  Rng rng(seed);
  const synth::Pattern kinds[3] = {synth::Pattern::checker,
                                   synth::Pattern::gradient_blobs,
                                   synth::Pattern::texture_noise};
  auto make = [&](int count, std::vector<SequenceSample>& out,
                  std::uint64_t salt) {
    for (int i = 0; i < count; ++i) {
      const auto kind = kinds[rng.below(3)];
      std::vector<synth::Translation> motion;
      for (int t = 1; t < spec.frames; ++t) {
        double dx = rng.uniform(-spec.max_shift, spec.max_shift);
        double dy = rng.uniform(-spec.max_shift, spec.max_shift);
        if (!spec.subpixel) {
          dx = std::round(dx);
          dy = std::round(dy);
        }
        motion.push_back({dx, dy});
      }
      SequenceSample s;
      s.hq = synth::generate_sequence(kind, spec.frames, spec.height,
                                      spec.width, motion,
                                      seed * 1000003ULL + salt * 131ULL + i);
      s.hq.fps = spec.fps;
      s.lq = synth::degrade(s.hq, synth::DegradationSpec{});
      s.lq_flows = flow::gt_flows_for(s.lq);
      s.hq_flows = flow::gt_flows_for(s.hq);
      out.push_back(std::move(s));
    }
  };
  make(spec.train_sequences, d.train, 1);
  make(spec.val_sequences, d.val, 2);
  return d;
}

ag::Var flow_consistency_term(const ag::Var& rec_t, const Tensor& rec_prev,
                              const Tensor& gt_t, const Tensor& gt_prev,
                              const flow::FlowField& f) {
  const Tensor warped_rec = flow::warp(rec_prev, f);
  const Tensor warped_gt = flow::warp(gt_prev, f);
  auto rec_residual = ag::sub(rec_t, ag::Var::constant(warped_rec));
  auto gt_residual = ag::Var::constant(gt_t - warped_gt);
  return ag::mse(rec_residual, gt_residual);
}

namespace {

struct FrameRef {
  const SequenceSample* seq;
  int t;
};

FrameRef pick_frame(const Dataset& data, Rng& rng, int min_t) {
  const auto& seq = data.train[rng.below(data.train.size())];
  const int t =
      min_t + static_cast<int>(rng.below(
                  static_cast<std::uint64_t>(seq.hq.t() - min_t)));
  return {&seq, t};
}

// Weighted accumulation of scalar loss terms.
ag::Var acc_term(ag::Var total, const ag::Var& term, double weight) {
  auto scaled = ag::scale(term, weight);
  return total.defined() ? ag::add(total, scaled) : scaled;
}

}  // namespace

TrainReport pretrain_codec(model::ModelBundle& bundle, const Dataset& data,
                           const StageConfig& cfg) {
  const double t0 = now_s();
  bundle.freeze_all_except({"codec.enc", "codec.dec"});
  AdamW opt(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  auto params = bundle.params();
  Rng rng(cfg.seed);
  TrainReport report;
  report.stage = "codec";
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    ag::Var loss;
    for (int s = 0; s < cfg.batch_size; ++s) {
      const auto ref = pick_frame(data, rng, 0);
      auto x = ag::Var::constant(ref.seq->hq.frames[ref.t]);
      auto rec = bundle.codec.decode(bundle.codec.encode(x));
      loss = acc_term(loss, ag::mse(rec, x), 1.0 / cfg.batch_size);
    }
    guard_finite(loss.val().v[0], cfg.stage, iter);
    report.iters.push_back({iter, loss.val().v[0], loss.val().v[0], 0, 0, 0});
    ag::backward(loss);
    opt.step(params);
  }
  bundle.codec.sync_temporal_encoder();
  // Calibrate the latent scale so the working latents are unit-variance,
  // matching the standard-normal latents the sampler starts from.
  bundle.codec.set_latent_scale(1.0);
  double sq_sum = 0.0;
  std::int64_t count = 0;
  for (const auto& seq : data.train) {
    const Tensor z = bundle.codec.encode(seq.hq.frames[0]);
    for (double v : z.v) sq_sum += v * v;
    count += z.numel();
  }
  const double std_dev = std::sqrt(sq_sum / std::max<std::int64_t>(1, count));
  if (std::isfinite(std_dev) && std_dev > 1e-6)
    bundle.codec.set_latent_scale(std_dev);
  bundle.mark_stage("0codec");
  report.wall_clock_s = now_s() - t0;
  return report;
}

TrainReport pretrain_teacher(model::ModelBundle& bundle, const Dataset& data,
                             const diffusion::NoiseSchedule& sched,
                             const StageConfig& cfg) {
  const double t0 = now_s();
  bundle.freeze_all_except({"unet"});
  AdamW opt(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  auto params = bundle.params();
  Rng rng(cfg.seed + 1);
  TrainReport report;
  report.stage = "teacher";
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    ag::Var loss;
    for (int s = 0; s < cfg.batch_size; ++s) {
      const auto ref = pick_frame(data, rng, 0);
      const Tensor z0 = bundle.codec.encode(ref.seq->hq.frames[ref.t]);
      const int t = static_cast<int>(rng.below(sched.t_total));
      Tensor eps = Tensor::randn(z0.dims, rng);
      const Tensor z_t = diffusion::add_noise(z0, eps, t, sched);
      auto eps_hat = bundle.unet.forward(
          ag::Var::constant(z_t),
          ag::Var::constant(ref.seq->lq.frames[ref.t]), t,
          bundle.unet.config().concat_warped
              ? nullptr  // forward() rejects this; teacher runs plain
              : nullptr);
      loss = acc_term(loss, ag::mse(eps_hat, ag::Var::constant(eps)),
                      1.0 / cfg.batch_size);
    }
    guard_finite(loss.val().v[0], cfg.stage, iter);
    report.iters.push_back({iter, loss.val().v[0], loss.val().v[0], 0, 0, 0});
    ag::backward(loss);
    opt.step(params);
  }
  bundle.mark_stage("0teacher");
  report.wall_clock_s = now_s() - t0;
  return report;
}

std::vector<TrainReport> pretrain_teacher_and_codec(
    model::ModelBundle& bundle, const Dataset& data,
    const diffusion::NoiseSchedule& sched, const StageConfig& codec_cfg,
    const StageConfig& teacher_cfg) {
  std::vector<TrainReport> reports;
  reports.push_back(pretrain_codec(bundle, data, codec_cfg));
  reports.push_back(pretrain_teacher(bundle, data, sched, teacher_cfg));
  return reports;
}

namespace {

// Shared by rollout/random distillation and ARTG training: Eq-style loss on
// the final latent plus decoded perceptual and adversarial terms.
struct DistillStep {
  ag::Var loss;                 // accumulated generator loss
  double rec = 0, lpips = 0, gan = 0;  // raw components of the last sample
  ag::Var decoded_fake;         // last decoded frame (for the D step)
};

void add_latent_losses(DistillStep& step, const model::ModelBundle& bundle,
                       const ag::Var& z_den, const Tensor& z_gt,
                       const Tensor& x_gt, const StageConfig& cfg,
                       bool adversarial_active, double batch_inv,
                       const codec::TemporalFeature* temporal,
                       LossGraphProbe* probe) {
  auto l2 = ag::mse(z_den, ag::Var::constant(z_gt));
  step.loss = acc_term(step.loss, l2, batch_inv);
  step.rec = l2.val().v[0];
  if (probe) probe->terms.push_back({"latent_l2", z_den.tag()});

  auto decoded = temporal
                     ? bundle.codec.decode_temporal(z_den, *temporal)
                     : bundle.codec.decode(z_den);
  auto p = perceptual::proxy().distance(decoded, ag::Var::constant(x_gt));
  step.loss = acc_term(step.loss, p, cfg.lambda_lpips * batch_inv);
  step.lpips = p.val().v[0];
  if (probe) probe->terms.push_back({"perceptual", z_den.tag()});

  if (adversarial_active) {
    auto g = nn::gan_generator_loss(bundle.disc, decoded);
    step.loss = acc_term(step.loss, g, cfg.lambda_gan * batch_inv);
    step.gan = g.val().v[0];
    if (probe) probe->terms.push_back({"adversarial", z_den.tag()});
  } else {
    step.gan = 0.0;
  }
  step.decoded_fake = decoded;
}

void discriminator_step(model::ModelBundle& bundle, AdamW& opt_d,
                        nn::ParamMap& params, const Tensor& real,
                        const Tensor& fake) {
  nn::set_group_requires_grad(params, "disc", true);
  auto d_loss = nn::gan_discriminator_loss(bundle.disc,
                                           ag::Var::constant(real),
                                           ag::Var::constant(fake));
  ag::backward(d_loss);
  opt_d.step(params);
  nn::set_group_requires_grad(params, "disc", false);
}

TrainReport run_distill(model::ModelBundle& bundle, const Dataset& data,
                        const diffusion::NoiseSchedule& sched,
                        const diffusion::TimestepPlan& plan,
                        const StageConfig& cfg, bool rollout,
                        LossGraphProbe* probe) {
  const double t0 = now_s();
  bundle.freeze_all_except({"unet"});
  auto params = bundle.params();
  nn::set_group_requires_grad(params, "disc", false);
  AdamW opt_g(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  AdamW opt_d(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  Rng rng(cfg.seed + 2);
  TrainReport report;
  report.stage = cfg.stage;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const bool adversarial = iter >= cfg.adv_warmup;
    DistillStep step;
    Tensor last_real;
    for (int s = 0; s < cfg.batch_size; ++s) {
      const auto ref = pick_frame(data, rng, 0);
      const Tensor& hq = ref.seq->hq.frames[ref.t];
      const Tensor z0 = bundle.codec.encode(hq);
      Tensor eps = Tensor::randn(z0.dims, rng);
      auto cond = ag::Var::constant(ref.seq->lq.frames[ref.t]);
      LossGraphProbe* sample_probe = (probe && iter == 0 && s == 0) ? probe : nullptr;
      ag::Var z_den;
      if (rollout) {
        const Tensor z_start =
            diffusion::add_noise(z0, eps, sched.t_total - 1, sched);
        denoise::RolloutHooks hooks;
        hooks.predict = [&](const ag::Var& z, int t) {
          return bundle.unet.forward(z, cond, t);
        };
        std::vector<ag::Var> steps;
        z_den = denoise::denoise_rollout(ag::Var::constant(z_start), plan,
                                         sched, hooks, &steps);
        if (sample_probe)
          for (const auto& sv : steps) sample_probe->step_tags.push_back(sv.tag());
      } else {
        // One U-Net call at a uniformly sampled plan-independent timestep;
        // supervises the single-step clean-latent estimate.
        const int t = static_cast<int>(rng.below(sched.t_total));
        const Tensor z_t = diffusion::add_noise(z0, eps, t, sched);
        auto eps_hat = bundle.unet.forward(ag::Var::constant(z_t), cond, t);
        z_den = diffusion::ddim_step(ag::Var::constant(z_t), eps_hat, t,
                                     diffusion::kFinalStep, sched);
        z_den.set_tag("single/final");
        if (sample_probe) sample_probe->step_tags.push_back(z_den.tag());
      }
      add_latent_losses(step, bundle, z_den, z0, hq, cfg, adversarial,
                        1.0 / cfg.batch_size, nullptr, sample_probe);
      last_real = hq;
    }
    guard_finite(step.loss.val().v[0], cfg.stage, iter);
    report.iters.push_back({iter, step.loss.val().v[0], step.rec, step.lpips,
                            step.gan, 0.0});
    ag::backward(step.loss);
    opt_g.step(params);
    if (adversarial)
      discriminator_step(bundle, opt_d, params, last_real,
                         step.decoded_fake.val());
  }
  bundle.mark_stage("1");
  report.wall_clock_s = now_s() - t0;
  return report;
}

}  // namespace

TrainReport distill_rollout(model::ModelBundle& bundle, const Dataset& data,
                            const diffusion::NoiseSchedule& sched,
                            const diffusion::TimestepPlan& plan,
                            const StageConfig& cfg, LossGraphProbe* probe) {
  if (!bundle.has_stage("0codec") || !bundle.has_stage("0teacher"))
    throw DependencyError("distill_rollout: stage-0 checkpoints required");
  return run_distill(bundle, data, sched, plan, cfg, /*rollout=*/true, probe);
}

TrainReport distill_random_timestep(model::ModelBundle& bundle,
                                    const Dataset& data,
                                    const diffusion::NoiseSchedule& sched,
                                    const diffusion::TimestepPlan& plan,
                                    const StageConfig& cfg) {
  if (!bundle.has_stage("0codec") || !bundle.has_stage("0teacher"))
    throw DependencyError("distill_random_timestep: stage-0 checkpoints required");
  return run_distill(bundle, data, sched, plan, cfg, /*rollout=*/false,
                     nullptr);
}

TrainReport train_tpm(model::ModelBundle& bundle, const Dataset& data,
                      const StageConfig& cfg) {
  if (!bundle.has_stage("0codec"))
    throw DependencyError("train_tpm: codec pretraining required");
  const double t0 = now_s();
  bundle.freeze_all_except({"codec.tpm"});
  auto params = bundle.params();
  AdamW opt_g(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  AdamW opt_d(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  Rng rng(cfg.seed + 3);
  TrainReport report;
  report.stage = "tpm";
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const bool adversarial = iter >= cfg.adv_warmup;
    ag::Var loss;
    double rec_c = 0, lpips_c = 0, gan_c = 0, flow_c = 0;
    Tensor last_real, last_fake;
    for (int s = 0; s < cfg.batch_size; ++s) {
      const auto ref = pick_frame(data, rng, 1);
      const Tensor& gt_t = ref.seq->hq.frames[ref.t];
      const Tensor& gt_prev = ref.seq->hq.frames[ref.t - 1];
      const auto& f_hq = ref.seq->hq_flows[ref.t - 1];
      // Previous frame reconstructed without temporal context, as the
      // stream's first-frame path would produce it.
      const Tensor rec_prev =
          bundle.codec.decode(bundle.codec.encode(gt_prev));
      const Tensor warped_prev = flow::warp(rec_prev, f_hq);
      const auto temporal = bundle.codec.extract_temporal(warped_prev);
      auto z = ag::Var::constant(bundle.codec.encode(gt_t));
      auto rec = bundle.codec.decode_temporal(z, temporal);

      auto rec_term = ag::smooth_l1(rec, ag::Var::constant(gt_t));
      loss = acc_term(loss, rec_term, 1.0 / cfg.batch_size);
      rec_c = rec_term.val().v[0];

      auto p = perceptual::proxy().distance(rec, ag::Var::constant(gt_t));
      loss = acc_term(loss, p, cfg.lambda_lpips / cfg.batch_size);
      lpips_c = p.val().v[0];

      auto fl = flow_consistency_term(rec, rec_prev, gt_t, gt_prev, f_hq);
      loss = acc_term(loss, fl, cfg.lambda_flow / cfg.batch_size);
      flow_c = fl.val().v[0];

      if (adversarial) {
        auto g = nn::gan_generator_loss(bundle.disc, rec);
        loss = acc_term(loss, g, cfg.lambda_gan / cfg.batch_size);
        gan_c = g.val().v[0];
      }
      last_real = gt_t;
      last_fake = rec.val();
    }
    guard_finite(loss.val().v[0], cfg.stage, iter);
    report.iters.push_back(
        {iter, loss.val().v[0], rec_c, lpips_c, gan_c, flow_c});
    ag::backward(loss);
    opt_g.step(params);
    if (adversarial)
      discriminator_step(bundle, opt_d, params, last_real, last_fake);
  }
  bundle.mark_stage("2");
  report.wall_clock_s = now_s() - t0;
  return report;
}

TrainReport train_artg(model::ModelBundle& bundle, const Dataset& data,
                       const diffusion::NoiseSchedule& sched,
                       const diffusion::TimestepPlan& plan,
                       const StageConfig& cfg) {
  if (!bundle.has_stage("1") || !bundle.has_stage("2"))
    throw DependencyError("train_artg: stages 1 and 2 must be complete");
  const double t0 = now_s();
  // spec contract: only ARTG updates; the discriminator stays fixed too.
  bundle.freeze_all_except({"artg"});
  auto params = bundle.params();
  AdamW opt(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  Rng rng(cfg.seed + 4);
  TrainReport report;
  report.stage = "artg";
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const bool adversarial = iter >= cfg.adv_warmup;
    DistillStep step;
    for (int s = 0; s < cfg.batch_size; ++s) {
      const auto ref = pick_frame(data, rng, 1);
      const Tensor& gt_t = ref.seq->hq.frames[ref.t];
      const Tensor& gt_prev = ref.seq->hq.frames[ref.t - 1];
      const auto& f_hq = ref.seq->hq_flows[ref.t - 1];
      const Tensor warped_prev = flow::warp(gt_prev, f_hq);
      auto warped = ag::Var::constant(warped_prev);
      const Tensor z0 = bundle.codec.encode(gt_t);
      Tensor eps = Tensor::randn(z0.dims, rng);
      const Tensor z_start =
          diffusion::add_noise(z0, eps, sched.t_total - 1, sched);
      auto cond = ag::Var::constant(ref.seq->lq.frames[ref.t]);
      denoise::RolloutHooks hooks;
      hooks.predict = [&](const ag::Var& z, int t) {
        return bundle.unet.forward(z, cond, t);
      };
      hooks.inject = [&](const ag::Var& z) {
        return bundle.artg.inject(z, warped);
      };
      auto z_den = denoise::denoise_rollout(ag::Var::constant(z_start), plan,
                                            sched, hooks, nullptr);
      const auto temporal = bundle.codec.extract_temporal(warped_prev);
      add_latent_losses(step, bundle, z_den, z0, gt_t, cfg, adversarial,
                        1.0 / cfg.batch_size, &temporal, nullptr);
    }
    guard_finite(step.loss.val().v[0], cfg.stage, iter);
    report.iters.push_back({iter, step.loss.val().v[0], step.rec, step.lpips,
                            step.gan, 0.0});
    ag::backward(step.loss);
    opt.step(params);
  }
  bundle.mark_stage("3");
  report.wall_clock_s = now_s() - t0;
  return report;
}

EvalResult evaluate_bundle(const model::ModelBundle& bundle,
                           const std::vector<SequenceSample>& sequences,
                           const diffusion::NoiseSchedule& sched,
                           const diffusion::TimestepPlan& plan,
                           const stream::InferOptions& opts) {
  if (sequences.empty()) throw ArgumentError("evaluate_bundle: no sequences");
  EvalResult acc;
  for (const auto& seq : sequences) {
    auto res = stream::process_stream(seq.lq.frames, seq.lq_flows, bundle,
                                      sched, plan, opts);
    const auto& out = res.outputs.frames;
    acc.psnr += metrics::psnr(out, seq.hq.frames);
    acc.ssim += metrics::ssim(out, seq.hq.frames);
    acc.pproxy += metrics::perceptual_distance(out, seq.hq.frames);
    acc.tlp += metrics::tlp(out, seq.hq.frames);
    acc.tof += metrics::tof(out, seq.hq.frames, &seq.hq_flows);
    acc.warp_err += flow::warp_error(out, seq.hq_flows);
  }
  const double n = static_cast<double>(sequences.size());
  acc.psnr /= n;
  acc.ssim /= n;
  acc.pproxy /= n;
  acc.tlp /= n;
  acc.tof /= n;
  acc.warp_err /= n;
  return acc;
}

double validation_proxy(const model::ModelBundle& bundle,
                        const std::vector<SequenceSample>& sequences,
                        const diffusion::NoiseSchedule& sched,
                        const diffusion::TimestepPlan& plan) {
  if (sequences.empty()) throw ArgumentError("validation_proxy: no sequences");
  double acc = 0.0;
  int count = 0;
  for (const auto& seq : sequences) {
    for (int t = 0; t < seq.hq.t(); ++t) {
      auto latent = diffusion::prepare_latents(seq.lq.frames[t], sched,
                                               555 + 31ULL * count,
                                               bundle.cfg.latent_channels);
      const Tensor z_den = denoise::denoise_rollout(latent, plan, sched,
                                                    bundle.unet, nullptr,
                                                    nullptr);
      const Tensor out = bundle.codec.decode(z_den);
      acc += perceptual::proxy().distance(out, seq.hq.frames[t]);
      ++count;
    }
  }
  return acc / count;
}

namespace {

// Joint alternative: every module trains at once on a composite objective.
TrainReport train_joint(model::ModelBundle& bundle, const Dataset& data,
                        const diffusion::NoiseSchedule& sched,
                        const diffusion::TimestepPlan& plan,
                        const StageConfig& cfg) {
  const double t0 = now_s();
  bundle.freeze_all_except({"unet", "codec.tpm", "artg"});
  auto params = bundle.params();
  nn::set_group_requires_grad(params, "disc", false);
  AdamW opt_g(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  AdamW opt_d(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.weight_decay);
  Rng rng(cfg.seed + 5);
  TrainReport report;
  report.stage = "joint";
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const bool adversarial = iter >= cfg.adv_warmup;
    DistillStep step;
    double flow_c = 0;
    for (int s = 0; s < cfg.batch_size; ++s) {
      const auto ref = pick_frame(data, rng, 1);
      const Tensor& gt_t = ref.seq->hq.frames[ref.t];
      const Tensor& gt_prev = ref.seq->hq.frames[ref.t - 1];
      const auto& f_hq = ref.seq->hq_flows[ref.t - 1];
      const Tensor warped_prev = flow::warp(gt_prev, f_hq);
      auto warped = ag::Var::constant(warped_prev);
      const Tensor z0 = bundle.codec.encode(gt_t);
      Tensor eps = Tensor::randn(z0.dims, rng);
      const Tensor z_start =
          diffusion::add_noise(z0, eps, sched.t_total - 1, sched);
      auto cond = ag::Var::constant(ref.seq->lq.frames[ref.t]);
      denoise::RolloutHooks hooks;
      hooks.predict = [&](const ag::Var& z, int t) {
        return bundle.unet.forward(z, cond, t);
      };
      hooks.inject = [&](const ag::Var& z) {
        return bundle.artg.inject(z, warped);
      };
      auto z_den = denoise::denoise_rollout(ag::Var::constant(z_start), plan,
                                            sched, hooks, nullptr);
      const auto temporal = bundle.codec.extract_temporal(warped_prev);
      add_latent_losses(step, bundle, z_den, z0, gt_t, cfg, adversarial,
                        1.0 / cfg.batch_size, &temporal, nullptr);
      const Tensor rec_prev = bundle.codec.decode(bundle.codec.encode(gt_prev));
      auto fl = flow_consistency_term(step.decoded_fake, rec_prev, gt_t,
                                      gt_prev, f_hq);
      step.loss = acc_term(step.loss, fl, cfg.lambda_flow / cfg.batch_size);
      flow_c = fl.val().v[0];
    }
    guard_finite(step.loss.val().v[0], "joint", iter);
    report.iters.push_back({iter, step.loss.val().v[0], step.rec, step.lpips,
                            step.gan, flow_c});
    ag::backward(step.loss);
    opt_g.step(params);
    if (adversarial)
      discriminator_step(bundle, opt_d, params, pick_frame(data, rng, 0)
                                                    .seq->hq.frames[0],
                         step.decoded_fake.val());
  }
  bundle.mark_stage("1");
  bundle.mark_stage("2");
  bundle.mark_stage("3");
  report.wall_clock_s = now_s() - t0;
  return report;
}

}  // namespace

std::vector<MatrixRow> run_stage_matrix(
    const model::ModelBundle& base, const Dataset& data,
    const diffusion::NoiseSchedule& sched, const diffusion::TimestepPlan& plan,
    const std::map<std::string, StageConfig>& stage_cfgs,
    const std::vector<std::string>& combos) {
  if (!base.has_stage("0codec") || !base.has_stage("0teacher"))
    throw DependencyError("run_stage_matrix: stage-0 checkpoints required");
  auto cfg_for = [&](const std::string& name, StageConfig fallback) {
    auto it = stage_cfgs.find(name);
    return it != stage_cfgs.end() ? it->second : fallback;
  };
  std::vector<MatrixRow> rows;
  for (const auto& combo : combos) {
    model::ModelBundle b = base.clone();
    MatrixRow row;
    row.combo = combo;
    if (combo == "1+2") {
      distill_rollout(b, data, sched, plan, cfg_for("distill", default_distill_config()));
      train_tpm(b, data, cfg_for("tpm", default_tpm_config()));
    } else if (combo == "1+3") {
      distill_rollout(b, data, sched, plan, cfg_for("distill", default_distill_config()));
      b.mark_stage("2");  // TPM left at init
      train_artg(b, data, sched, plan, cfg_for("artg", default_artg_config()));
    } else if (combo == "2+3") {
      train_tpm(b, data, cfg_for("tpm", default_tpm_config()));
      b.mark_stage("1");  // U-Net left at teacher init
      train_artg(b, data, sched, plan, cfg_for("artg", default_artg_config()));
    } else if (combo == "joint") {
      StageConfig jcfg = cfg_for("joint", cfg_for("distill", default_distill_config()));
      if (jcfg.lambda_flow == 0.0) jcfg.lambda_flow = default_tpm_config().lambda_flow;
      train_joint(b, data, sched, plan, jcfg);
      row.any_frozen_during_training = false;
    } else if (combo == "separate") {
      distill_rollout(b, data, sched, plan, cfg_for("distill", default_distill_config()));
      train_tpm(b, data, cfg_for("tpm", default_tpm_config()));
      train_artg(b, data, sched, plan, cfg_for("artg", default_artg_config()));
    } else {
      throw ArgumentError("run_stage_matrix: unknown combo " + combo);
    }
    row.metrics = evaluate_bundle(b, data.val, sched, plan, stream::InferOptions{});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace streamvsr::train
