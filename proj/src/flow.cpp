// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/flow.hpp"

#include <cstring>
#include <fstream>

#include "streamvsr/errors.hpp"

namespace streamvsr::flow {

Tensor warp(const Tensor& image, const FlowField& f, Border border) {
  if (image.dims.size() != 3)
    throw DimensionError("warp: image must be {c,h,w}");
  if (image.h() != f.h || image.w() != f.w)
    throw DimensionError("warp: flow shape " + std::to_string(f.h) + "x" +
                         std::to_string(f.w) + " does not match image " +
                         image.shape_str());
  if (!f.finite()) throw ArgumentError("warp: flow contains non-finite values");
  Tensor out(image.dims);
  kernels::warp_bilinear(image.c(), image.h(), image.w(), image.v.data(),
                         f.u.data(), f.v.data(), border, out.v.data());
  return out;
}

FlowField gt_flow(const synth::MotionStep& step, int h, int w) {
  if (const auto* tr = std::get_if<synth::Translation>(&step))
    return FlowField::constant(h, w, tr->dx, tr->dy);
  const auto& af = std::get<synth::AffineMotion>(step);
  FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.u_at(y, x) = af.a * x + af.b * y + af.tx - x;
      f.v_at(y, x) = af.c * x + af.d * y + af.ty - y;
    }
  return f;
}

FlowField upscale_flow(const FlowField& f, int s) {
  if (s < 1) throw ArgumentError("upscale_flow: s must be >= 1");
  FlowField out(f.h * s, f.w * s);
  kernels::resize_bilinear(1, f.h, f.w, out.h, out.w, f.u.data(), out.u.data());
  kernels::resize_bilinear(1, f.h, f.w, out.h, out.w, f.v.data(), out.v.data());
  const double sd = static_cast<double>(s);
  for (auto& x : out.u) x *= sd;
  for (auto& x : out.v) x *= sd;
  return out;
}

FlowField estimate_flow_blockmatch(const Tensor& prev, const Tensor& curr,
                                   int block, int radius) {
  if (!prev.same_shape(curr))
    throw DimensionError("estimate_flow_blockmatch: frames differ in shape");
  if (block < 1 || radius < 0)
    throw ArgumentError("estimate_flow_blockmatch: need block >= 1, radius >= 0");
  if (block > prev.h() || block > prev.w())
    throw ArgumentError("estimate_flow_blockmatch: block larger than image");
  FlowField f(prev.h(), prev.w());
  kernels::block_sad_flow(prev.c(), prev.h(), prev.w(), prev.v.data(),
                          curr.v.data(), block, radius, f.u.data(),
                          f.v.data());
  return f;
}

// MAE is taken over pixels whose warped sample stays inside the previous
// frame, so exact synthetic flows score exactly zero; no occlusion masking
// beyond that validity check.
double warp_error(const std::vector<Tensor>& frames,
                  const std::vector<FlowField>& flows) {
  if (frames.size() < 1) throw ArgumentError("warp_error: empty sequence");
  if (flows.size() + 1 != frames.size())
    throw ArgumentError("warp_error: need T-1 flows for T frames");
  if (frames.size() == 1) return 0.0;
  double acc = 0.0;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const Tensor& cur = frames[t];
    const Tensor warped = warp(frames[t - 1], flows[t - 1]);
    const FlowField& f = flows[t - 1];
    double sum = 0.0;
    std::int64_t count = 0;
    for (int y = 0; y < cur.h(); ++y)
      for (int x = 0; x < cur.w(); ++x) {
        const double sx = x + f.u_at(y, x);
        const double sy = y + f.v_at(y, x);
        if (sx < 0.0 || sx > cur.w() - 1 || sy < 0.0 || sy > cur.h() - 1)
          continue;
        for (int c = 0; c < cur.c(); ++c)
          sum += std::fabs(cur.at(c, y, x) - warped.at(c, y, x));
        count += cur.c();
      }
    if (count > 0) acc += sum / static_cast<double>(count);
  }
  return 255.0 * acc / static_cast<double>(frames.size() - 1);
}

double warp_error(const synth::VideoSequence& seq,
                  const std::vector<FlowField>& flows) {
  return warp_error(seq.frames, flows);
}

void write_flo(const std::filesystem::path& file, const FlowField& f) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + file.string());
  const float magic = 202021.25f;
  const std::int32_t w = f.w, h = f.h;
  out.write(reinterpret_cast<const char*>(&magic), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x) {
      const float uv[2] = {static_cast<float>(f.u_at(y, x)),
                           static_cast<float>(f.v_at(y, x))};
      out.write(reinterpret_cast<const char*>(uv), 8);
    }
  if (!out) throw IoError(".flo write failed: " + file.string());
}

FlowField read_flo(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open: " + file.string());
  float magic = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  if (!in || magic != 202021.25f) throw ParseError("bad .flo magic", 0);
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || w <= 0 || h <= 0) throw ParseError("bad .flo dimensions", 4);
  FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float uv[2];
      in.read(reinterpret_cast<char*>(uv), 8);
      if (!in)
        throw ParseError("truncated .flo data",
                         12 + (static_cast<std::size_t>(y) * w + x) * 8);
      f.u_at(y, x) = uv[0];
      f.v_at(y, x) = uv[1];
    }
  return f;
}

std::vector<FlowField> gt_flows_for(const synth::VideoSequence& seq) {
  if (!seq.motion)
    throw ArgumentError("gt_flows_for: sequence has no motion metadata");
  std::vector<FlowField> flows;
  flows.reserve(seq.motion->size());
  for (const auto& step : *seq.motion)
    flows.push_back(gt_flow(step, seq.h(), seq.w()));
  return flows;
}

}  // namespace streamvsr::flow
