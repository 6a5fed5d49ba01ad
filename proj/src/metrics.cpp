// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/metrics.hpp"

#include <chrono>
#include <cmath>

#include "streamvsr/errors.hpp"
#include "streamvsr/perceptual.hpp"

namespace streamvsr::metrics {

double psnr(const Tensor& a, const Tensor& b) {
  const double mse = mean_sq_diff(a, b);
  if (mse <= 0.0) return kPsnrCap;
  const double db = 10.0 * std::log10(1.0 / mse);
  return db > kPsnrCap ? kPsnrCap : db;
}

double psnr(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size() || a.empty())
    throw ArgumentError("psnr: sequence length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += psnr(a[i], b[i]);
  return acc / static_cast<double>(a.size());
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_window() {
  static const std::vector<double> win = [] {
    std::vector<double> w(kWin * kWin);
    double sum = 0.0;
    const int r = kWin / 2;
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x) {
        const double g = std::exp(-(x * x + y * y) / (2.0 * kSigma * kSigma));
        w[(y + r) * kWin + (x + r)] = g;
        sum += g;
      }
    for (auto& x : w) x /= sum;
    return w;
  }();
  return win;
}

double ssim_plane(const double* a, const double* b, int h, int w) {
  if (h < kWin || w < kWin) {
    // Image smaller than the window: single global window, uniform weights.
    double ma = 0, mb = 0;
    const double n = static_cast<double>(h) * w;
    for (int i = 0; i < h * w; ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= n;
    mb /= n;
    double va = 0, vb = 0, cov = 0;
    for (int i = 0; i < h * w; ++i) {
      va += (a[i] - ma) * (a[i] - ma);
      vb += (b[i] - mb) * (b[i] - mb);
      cov += (a[i] - ma) * (b[i] - mb);
    }
    va /= n;
    vb /= n;
    cov /= n;
    return ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
           ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }
  const auto& win = gaussian_window();
  const int r = kWin / 2;
  double total = 0.0;
  int count = 0;
  for (int cy = r; cy < h - r; ++cy) {
    for (int cx = r; cx < w - r; ++cx) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double wgt = win[(dy + r) * kWin + (dx + r)];
          const double av = a[(cy + dy) * w + cx + dx];
          const double bv = b[(cy + dy) * w + cx + dx];
          ma += wgt * av;
          mb += wgt * bv;
          maa += wgt * av * av;
          mbb += wgt * bv * bv;
          mab += wgt * av * bv;
        }
      const double va = maa - ma * ma;
      const double vb = mbb - mb * mb;
      const double cov = mab - ma * mb;
      total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
               ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("ssim: shape mismatch");
  const int hw = a.h() * a.w();
  double acc = 0.0;
  for (int ch = 0; ch < a.c(); ++ch)
    acc += ssim_plane(a.v.data() + static_cast<std::size_t>(ch) * hw,
                      b.v.data() + static_cast<std::size_t>(ch) * hw, a.h(),
                      a.w());
  return acc / a.c();
}

double ssim(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size() || a.empty())
    throw ArgumentError("ssim: sequence length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += ssim(a[i], b[i]);
  return acc / static_cast<double>(a.size());
}

double tlp(const std::vector<Tensor>& out, const std::vector<Tensor>& gt) {
  if (out.size() != gt.size())
    throw ArgumentError("tlp: sequence length mismatch");
  if (out.size() < 2) throw ArgumentError("tlp: need at least 2 frames");
  const auto& p = perceptual::proxy();
  double acc = 0.0;
  for (std::size_t t = 1; t < out.size(); ++t) {
    const double d_out = p.distance(out[t], out[t - 1]);
    const double d_gt = p.distance(gt[t], gt[t - 1]);
    acc += std::fabs(d_out - d_gt);
  }
  return 100.0 * acc / static_cast<double>(out.size() - 1);
}

double tof(const std::vector<Tensor>& out, const std::vector<Tensor>& gt,
           const std::vector<flow::FlowField>* gt_flows, int block,
           int radius) {
  if (out.size() != gt.size())
    throw ArgumentError("tof: sequence length mismatch");
  if (out.size() < 2) throw ArgumentError("tof: need at least 2 frames");
  if (gt_flows && gt_flows->size() + 1 != gt.size())
    throw ArgumentError("tof: wrong number of ground-truth flows");
  double acc = 0.0;
  for (std::size_t t = 1; t < out.size(); ++t) {
    const auto f_out =
        flow::estimate_flow_blockmatch(out[t - 1], out[t], block, radius);
    const auto f_gt = gt_flows
                          ? (*gt_flows)[t - 1]
                          : flow::estimate_flow_blockmatch(gt[t - 1], gt[t],
                                                           block, radius);
    if (f_out.h != f_gt.h || f_out.w != f_gt.w)
      throw DimensionError("tof: flow field shape mismatch");
    double l1 = 0.0;
    for (std::size_t i = 0; i < f_out.u.size(); ++i)
      l1 += std::fabs(f_out.u[i] - f_gt.u[i]) +
            std::fabs(f_out.v[i] - f_gt.v[i]);
    acc += l1 / static_cast<double>(f_out.u.size());
  }
  return 10.0 * acc / static_cast<double>(out.size() - 1);
}

double perceptual_distance(const std::vector<Tensor>& out,
                           const std::vector<Tensor>& gt) {
  if (out.size() != gt.size() || out.empty())
    throw ArgumentError("perceptual_distance: length mismatch");
  const auto& p = perceptual::proxy();
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    acc += p.distance(out[i], gt[i]);
  return acc / static_cast<double>(out.size());
}

LatencySummary latency_model(LatencyMode mode, double per_frame, int n_frames,
                             int chunk) {
  if (per_frame <= 0.0) throw ArgumentError("latency_model: per_frame <= 0");
  if (n_frames < 1) throw ArgumentError("latency_model: N < 1");
  LatencySummary s;
  switch (mode) {
    case LatencyMode::online:
      s.latency_first = s.latency_avg = s.latency_max = per_frame;
      break;
    case LatencyMode::offline_full:
      s.latency_first = n_frames * per_frame;
      s.latency_max = n_frames * per_frame;
      s.latency_avg = n_frames * per_frame / 2.0;
      break;
    case LatencyMode::offline_chunk: {
      if (chunk < 1 || chunk > n_frames)
        throw ArgumentError("latency_model: chunk must be in [1, N]");
      s.latency_first = chunk * per_frame;
      s.latency_max = n_frames * per_frame;
      double acc = 0.0;
      for (int i = 1; i <= n_frames; ++i) {
        const int chunk_end = std::min(((i - 1) / chunk + 1) * chunk, n_frames);
        acc += chunk_end * per_frame;
      }
      s.latency_avg = acc / n_frames;
      break;
    }
  }
  return s;
}

namespace {
double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}
}  // namespace

void StreamProfiler::mark_input() { avail_.push_back(now_seconds()); }
void StreamProfiler::mark_emit() { emit_.push_back(now_seconds()); }

LatencyProfile StreamProfiler::finalize() const {
  if (avail_.size() != emit_.size())
    throw ProtocolError("profiler: input/emit mark count mismatch");
  LatencyProfile p;
  double prev_emit = -1.0;
  for (std::size_t i = 0; i < avail_.size(); ++i) {
    const double lat = emit_[i] - avail_[i];
    const double start = prev_emit > avail_[i] ? prev_emit : avail_[i];
    p.latency.push_back(lat);
    p.compute.push_back(emit_[i] - start);
    prev_emit = emit_[i];
  }
  if (!p.latency.empty()) {
    p.latency_first = p.latency.front();
    double sum = 0.0, mx = 0.0, csum = 0.0;
    for (double x : p.latency) {
      sum += x;
      if (x > mx) mx = x;
    }
    for (double x : p.compute) csum += x;
    p.latency_avg = sum / static_cast<double>(p.latency.size());
    p.latency_max = mx;
    p.runtime = csum / static_cast<double>(p.compute.size());
  }
  return p;
}

LatencyProfile profile_stream(
    const std::function<Tensor(const Tensor&)>& process,
    const std::vector<Tensor>& inputs) {
  StreamProfiler prof;
  for (const auto& in : inputs) {
    prof.mark_input();
    (void)process(in);
    prof.mark_emit();
  }
  return prof.finalize();
}

}  // namespace streamvsr::metrics
