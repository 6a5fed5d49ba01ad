// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "streamvsr/metrics.hpp"
#include "streamvsr/model.hpp"

namespace streamvsr::stream {

// Ablation and determinism switches for the autoregressive engine.
struct InferOptions {
  bool use_artg = true;
  bool use_tpm = true;
  bool unwarped_temporal = false;  // feed the previous output without warping
  std::uint64_t base_seed = 1000;  // per-frame latent seed = base + index
};

// Carries exactly one previous output; memory is O(1) in stream length.
struct StreamState {
  std::optional<Tensor> prev_hq;
  std::optional<codec::TemporalFeature> prev_temporal;
  int index = 0;
};

// One Alg-style frame step: PrepareLatents, K x (ARTG + predict + DDIM),
// temporal decode. `flow_lq` must be present exactly when a previous output
// exists; it is LQ-resolution backward flow, upscaled x4 internally.
Tensor process_frame(StreamState& state, const Tensor& lq,
                     const std::optional<flow::FlowField>& flow_lq,
                     const model::ModelBundle& bundle,
                     const diffusion::NoiseSchedule& sched,
                     const diffusion::TimestepPlan& plan,
                     const InferOptions& opts);

struct StreamResult {
  synth::VideoSequence outputs;
  metrics::LatencyProfile profile;
};

// Pull-based source so outputs can be emitted before later inputs are read.
using FrameSource = std::function<
    std::optional<std::pair<Tensor, std::optional<flow::FlowField>>>()>;
using FrameSink = std::function<void(int index, const Tensor& hq)>;

StreamResult process_stream(const FrameSource& next_frame,
                            const model::ModelBundle& bundle,
                            const diffusion::NoiseSchedule& sched,
                            const diffusion::TimestepPlan& plan,
                            const InferOptions& opts,
                            const FrameSink& emit = nullptr);

// In-memory convenience: LQ frames plus per-pair flows.
StreamResult process_stream(const std::vector<Tensor>& lq_frames,
                            const std::vector<flow::FlowField>& flows,
                            const model::ModelBundle& bundle,
                            const diffusion::NoiseSchedule& sched,
                            const diffusion::TimestepPlan& plan,
                            const InferOptions& opts);

}  // namespace streamvsr::stream
