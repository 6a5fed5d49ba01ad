// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "streamvsr/model.hpp"
#include "streamvsr/stream.hpp"

namespace streamvsr::train {

struct StageConfig {
  std::string stage;  // codec | teacher | distill | distill-random | tpm | artg
  int iterations = 100;
  int batch_size = 8;
  double lr = 5e-5;
  double adam_beta1 = 0.9, adam_beta2 = 0.999;
  double weight_decay = 0.01;
  double lambda_lpips = 0.5;
  double lambda_gan = 0.025;
  double lambda_flow = 0.0;
  int adv_warmup = 20000;  // adversarial term is exactly 0 before this
  std::uint64_t seed = 7;
};

// Stage defaults (reconstruction weight is the implicit 1.0).
StageConfig default_codec_config();
StageConfig default_teacher_config();
StageConfig default_distill_config();         // lpips 0.5, gan 0.025
StageConfig default_distill_random_config();  // as distill, one U-Net call
StageConfig default_tpm_config();             // lpips 0.3, flow 0.1, gan 0.025
StageConfig default_artg_config();            // as distill

struct IterRecord {
  int iter = 0;
  double total = 0, rec = 0, lpips = 0, gan = 0, flow = 0;
};

struct TrainReport {
  std::string stage;
  std::vector<IterRecord> iters;
  double wall_clock_s = 0.0;
  std::map<std::string, double> eval_snapshot;

  bool finite() const;
  // Mean total loss over a window of iterations centered at `center`.
  double smoothed_loss(int center, int window = 21) const;
  double final_loss(int window = 21) const;
};

// Decoupled-weight-decay Adam. Updates only trainable parameters and clears
// their gradients afterwards.
class AdamW {
 public:
  AdamW(double lr, double beta1, double beta2, double weight_decay);
  void step(nn::ParamMap& params);
  static void zero_grad(nn::ParamMap& params);

 private:
  struct Slot {
    Tensor m, v;
  };
  double lr_, b1_, b2_, wd_;
  int t_ = 0;
  std::map<std::string, Slot> slots_;
};

// --- synthetic dataset plumbing ---

struct DataSpec {
  int train_sequences = 12;
  int val_sequences = 4;
  int frames = 6;
  int height = 32, width = 32;  // HQ dims; LQ is /4
  double max_shift = 1.5;
  bool subpixel = true;
  double fps = 24.0;
};

struct SequenceSample {
  synth::VideoSequence hq, lq;
  std::vector<flow::FlowField> lq_flows;  // ground truth at LQ resolution
  std::vector<flow::FlowField> hq_flows;  // ground truth at HQ resolution
};

struct Dataset {
  std::vector<SequenceSample> train, val;
};

Dataset synth_dataset(const DataSpec& spec, std::uint64_t seed);

// --- loss graph inspection ---

struct LossTermRecord {
  std::string name;
  std::string input_tag;  // tag of the latent the term is computed from
};

struct LossGraphProbe {
  std::vector<LossTermRecord> terms;
  std::vector<std::string> step_tags;  // every rollout step tag, in order
};

// Differentiable flow-consistency term: the GT-flow-aligned temporal
// residual of the reconstruction must match that of the ground truth.
// Exactly 0 for temporally constant reconstructions of a static clip.
ag::Var flow_consistency_term(const ag::Var& rec_t, const Tensor& rec_prev,
                              const Tensor& gt_t, const Tensor& gt_prev,
                              const flow::FlowField& f);

// --- stages ---

// Stage 0a/0b: codec reconstruction, then T-step noise-prediction teacher.
TrainReport pretrain_codec(model::ModelBundle& bundle, const Dataset& data,
                           const StageConfig& cfg);
TrainReport pretrain_teacher(model::ModelBundle& bundle, const Dataset& data,
                             const diffusion::NoiseSchedule& sched,
                             const StageConfig& cfg);
std::vector<TrainReport> pretrain_teacher_and_codec(
    model::ModelBundle& bundle, const Dataset& data,
    const diffusion::NoiseSchedule& sched, const StageConfig& codec_cfg,
    const StageConfig& teacher_cfg);

// Stage 1: full-trajectory distillation; supervises only the final latent.
TrainReport distill_rollout(model::ModelBundle& bundle, const Dataset& data,
                            const diffusion::NoiseSchedule& sched,
                            const diffusion::TimestepPlan& plan,
                            const StageConfig& cfg,
                            LossGraphProbe* probe = nullptr);

// Baseline: single uniformly sampled timestep per iteration.
TrainReport distill_random_timestep(model::ModelBundle& bundle,
                                    const Dataset& data,
                                    const diffusion::NoiseSchedule& sched,
                                    const diffusion::TimestepPlan& plan,
                                    const StageConfig& cfg);

// Stage 2: decoder temporal fusion; everything but the TPM is frozen.
TrainReport train_tpm(model::ModelBundle& bundle, const Dataset& data,
                      const StageConfig& cfg);

// Stage 3: ARTG only; U-Net, decoder and discriminator stay fixed.
TrainReport train_artg(model::ModelBundle& bundle, const Dataset& data,
                       const diffusion::NoiseSchedule& sched,
                       const diffusion::TimestepPlan& plan,
                       const StageConfig& cfg);

// --- evaluation helpers ---

struct EvalResult {
  double psnr = 0, ssim = 0, pproxy = 0, tlp = 0, tof = 0, warp_err = 0;
};

EvalResult evaluate_bundle(const model::ModelBundle& bundle,
                           const std::vector<SequenceSample>& sequences,
                           const diffusion::NoiseSchedule& sched,
                           const diffusion::TimestepPlan& plan,
                           const stream::InferOptions& opts);

// Mean perceptual-proxy distance of the per-frame rollout (no temporal
// modules) against HQ on validation frames; the stage-1 health metric.
double validation_proxy(const model::ModelBundle& bundle,
                        const std::vector<SequenceSample>& sequences,
                        const diffusion::NoiseSchedule& sched,
                        const diffusion::TimestepPlan& plan);

// --- stage-combination study ---

struct MatrixRow {
  std::string combo;
  EvalResult metrics;
  bool any_frozen_during_training = true;
};

// combos from {"1+2","1+3","2+3","joint","separate"}; each run starts from a
// clone of `base` (stage-0 weights).
std::vector<MatrixRow> run_stage_matrix(
    const model::ModelBundle& base, const Dataset& data,
    const diffusion::NoiseSchedule& sched, const diffusion::TimestepPlan& plan,
    const std::map<std::string, StageConfig>& stage_cfgs,
    const std::vector<std::string>& combos);

}  // namespace streamvsr::train
