// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "streamvsr/kernels.hpp"
#include "streamvsr/tensor.hpp"
#include "streamvsr/video_synth.hpp"

namespace streamvsr::flow {

using kernels::Border;

// Dense backward flow between a frame pair: the output pixel (x,y) of the
// current frame samples the previous frame at (x+u, y+v). Warping the
// previous frame with this field aligns it to the current frame.
struct FlowField {
  int h = 0, w = 0;
  std::vector<double> u, v;

  FlowField() = default;
  FlowField(int h_, int w_)
      : h(h_), w(w_),
        u(static_cast<std::size_t>(h_) * w_, 0.0),
        v(static_cast<std::size_t>(h_) * w_, 0.0) {}

  static FlowField constant(int h, int w, double du, double dv) {
    FlowField f(h, w);
    for (auto& x : f.u) x = du;
    for (auto& x : f.v) x = dv;
    return f;
  }

  double& u_at(int y, int x) { return u[static_cast<std::size_t>(y) * w + x]; }
  double& v_at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double u_at(int y, int x) const { return u[static_cast<std::size_t>(y) * w + x]; }
  double v_at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }

  bool finite() const {
    for (double x : u)
      if (!std::isfinite(x)) return false;
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// Bilinear backward warp; shape of flow must match the image plane.
Tensor warp(const Tensor& image, const FlowField& f,
            Border border = Border::replicate);

// Exact analytic flow for a synthetic motion step.
FlowField gt_flow(const synth::MotionStep& step, int h, int w);

// Resample to (s*h, s*w) and scale displacements by s.
FlowField upscale_flow(const FlowField& f, int s);

// Integer block-matching (SAD) flow; crude RAFT stand-in.
FlowField estimate_flow_blockmatch(const Tensor& prev, const Tensor& curr,
                                   int block, int radius);

// mean_t MAE(frame_t, warp(frame_{t-1}, flows[t-1])) * 255, t >= 1.
double warp_error(const std::vector<Tensor>& frames,
                  const std::vector<FlowField>& flows);
double warp_error(const synth::VideoSequence& seq,
                  const std::vector<FlowField>& flows);

// Middlebury .flo: float magic 202021.25, int32 width/height, row-major
// interleaved float32 (u,v).
void write_flo(const std::filesystem::path& file, const FlowField& f);
FlowField read_flo(const std::filesystem::path& file);

// Ground-truth LQ-resolution flows for a synthetic sequence (one per frame
// pair); requires motion metadata.
std::vector<FlowField> gt_flows_for(const synth::VideoSequence& seq);

}  // namespace streamvsr::flow
