// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "streamvsr/flow.hpp"
#include "streamvsr/tensor.hpp"

namespace streamvsr::metrics {

// PSNR on [0,1] data; zero-MSE pairs report the cap so CSV cells stay finite.
inline constexpr double kPsnrCap = 99.0;

double psnr(const Tensor& a, const Tensor& b);
double psnr(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), k1=0.01, k2=0.03,
// averaged over channels (and frames for sequences).
double ssim(const Tensor& a, const Tensor& b);
double ssim(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

// Temporal perceptual consistency: 100 * mean_t |P(out_t, out_{t-1}) -
// P(gt_t, gt_{t-1})| with P the fixed-seed perceptual proxy.
double tlp(const std::vector<Tensor>& out, const std::vector<Tensor>& gt);

// Temporal flow consistency: 10 * mean_t L1(OF(out pair) - OF(gt pair)).
// OF is the block-matching estimator; exact flows can substitute on the GT
// side when motion metadata exists.
double tof(const std::vector<Tensor>& out, const std::vector<Tensor>& gt,
           const std::vector<flow::FlowField>* gt_flows = nullptr,
           int block = 8, int radius = 4);

// Mean perceptual-proxy distance between paired frames.
double perceptual_distance(const std::vector<Tensor>& out,
                           const std::vector<Tensor>& gt);

struct LatencySummary {
  double latency_first = 0.0;
  double latency_avg = 0.0;
  double latency_max = 0.0;
};

enum class LatencyMode { online, offline_full, offline_chunk };

// Analytic accounting. online: every figure equals the per-frame runtime.
// offline_full: first/max gate on processing the whole sequence (N*p); avg
// follows the uniform-release midpoint accounting (N*p/2). offline_chunk(c):
// first = c*p, max = N*p, avg = mean over frames of their chunk's
// completion delay.
LatencySummary latency_model(LatencyMode mode, double per_frame, int n_frames,
                             int chunk = 0);

struct LatencyProfile {
  std::vector<double> latency;  // emit_i - avail_i, seconds
  std::vector<double> compute;  // time spent producing frame i
  double runtime = 0.0;         // mean compute per frame
  double latency_first = 0.0;
  double latency_avg = 0.0;
  double latency_max = 0.0;
};

// Wall-clock bookkeeping shared by the stream engine and the profiler.
class StreamProfiler {
 public:
  void mark_input();  // call when frame i becomes available
  void mark_emit();   // call when frame i is emitted
  LatencyProfile finalize() const;

 private:
  std::vector<double> avail_, emit_;
};

// Runs `process` over the inputs one frame at a time and measures
// per-frame latency and compute.
LatencyProfile profile_stream(
    const std::function<Tensor(const Tensor&)>& process,
    const std::vector<Tensor>& inputs);

}  // namespace streamvsr::metrics
