// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/stream.hpp"

#include "streamvsr/errors.hpp"

namespace streamvsr::stream {

Tensor process_frame(StreamState& state, const Tensor& lq,
                     const std::optional<flow::FlowField>& flow_lq,
                     const model::ModelBundle& bundle,
                     const diffusion::NoiseSchedule& sched,
                     const diffusion::TimestepPlan& plan,
                     const InferOptions& opts) {
  const bool have_prev = state.prev_hq.has_value();
  if (have_prev != flow_lq.has_value())
    throw ProtocolError(
        "process_frame: flow must be present exactly when a previous output "
        "exists");

  auto latent = diffusion::prepare_latents(
      lq, sched, opts.base_seed + static_cast<std::uint64_t>(state.index),
      bundle.cfg.latent_channels);

  std::optional<Tensor> warped_prev;
  if (have_prev) {
    if (opts.unwarped_temporal) {
      warped_prev = *state.prev_hq;
    } else {
      const auto flow_hq = flow::upscale_flow(*flow_lq, 4);
      warped_prev = flow::warp(*state.prev_hq, flow_hq);
    }
  }

  const denoise::Artg* artg =
      (have_prev && opts.use_artg) ? &bundle.artg : nullptr;
  const Tensor z_den = denoise::denoise_rollout(
      latent, plan, sched, bundle.unet, artg,
      warped_prev ? &*warped_prev : nullptr);

  Tensor hq;
  if (have_prev && opts.use_tpm) {
    // The frozen temporal encoder runs once per frame; its features are
    // cached in the state for inspection but recomputed per new frame.
    auto temporal = bundle.codec.extract_temporal(*warped_prev);
    hq = bundle.codec.decode_temporal(z_den, temporal);
    state.prev_temporal = std::move(temporal);
  } else {
    hq = bundle.codec.decode(z_den);
    state.prev_temporal.reset();
  }

  state.prev_hq = hq;
  state.index += 1;
  return hq;
}

StreamResult process_stream(const FrameSource& next_frame,
                            const model::ModelBundle& bundle,
                            const diffusion::NoiseSchedule& sched,
                            const diffusion::TimestepPlan& plan,
                            const InferOptions& opts, const FrameSink& emit) {
  StreamResult res;
  StreamState state;
  metrics::StreamProfiler prof;
  while (true) {
    auto item = next_frame();
    if (!item) break;
    prof.mark_input();
    Tensor hq = process_frame(state, item->first, item->second, bundle, sched,
                              plan, opts);
    if (emit) emit(state.index - 1, hq);
    prof.mark_emit();
    res.outputs.frames.push_back(std::move(hq));
  }
  res.profile = prof.finalize();
  return res;
}

StreamResult process_stream(const std::vector<Tensor>& lq_frames,
                            const std::vector<flow::FlowField>& flows,
                            const model::ModelBundle& bundle,
                            const diffusion::NoiseSchedule& sched,
                            const diffusion::TimestepPlan& plan,
                            const InferOptions& opts) {
  if (!lq_frames.empty() && flows.size() + 1 != lq_frames.size())
    throw ArgumentError("process_stream: need T-1 flows for T frames");
  std::size_t i = 0;
  FrameSource source =
      [&]() -> std::optional<std::pair<Tensor, std::optional<flow::FlowField>>> {
    if (i >= lq_frames.size()) return std::nullopt;
    std::optional<flow::FlowField> f;
    if (i > 0) f = flows[i - 1];
    auto out = std::make_pair(lq_frames[i], std::move(f));
    ++i;
    return out;
  };
  return process_stream(source, bundle, sched, plan, opts);
}

}  // namespace streamvsr::stream
