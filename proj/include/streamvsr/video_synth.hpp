// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "streamvsr/tensor.hpp"

namespace streamvsr::synth {

enum class Pattern { checker, gradient_blobs, texture_noise };

Pattern pattern_from_string(const std::string& s);
std::string pattern_to_string(Pattern p);

// Per-frame sampling displacement: frame t reads the moving pattern at
// (x + dx, y + dy) relative to frame t-1, with periodic wrap. The backward
// flow between the pair is therefore the constant field (dx, dy).
struct Translation {
  double dx = 0.0, dy = 0.0;
};

struct AffineMotion {
  // Sample coordinate map: (x,y) -> (a*x + b*y + tx, c*x + d*y + ty).
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, tx = 0.0, ty = 0.0;
};

using MotionStep = std::variant<Translation, AffineMotion>;

struct VideoSequence {
  std::vector<Tensor> frames;  // each {3,H,W}, values in [0,1]
  double fps = 24.0;
  std::optional<std::vector<MotionStep>> motion;  // size T-1 when present

  int t() const { return static_cast<int>(frames.size()); }
  int h() const { return frames.at(0).h(); }
  int w() const { return frames.at(0).w(); }
};

struct DegradationSpec {
  int scale = 4;
  std::string kernel = "bicubic-aa";  // Keys a=-0.5, support scaled by s
};

// Deterministic analytic pattern animated by cumulative displacement, so the
// frame pair flow is exact. H, W must be multiples of 8.
VideoSequence generate_sequence(Pattern pattern, int t, int h, int w,
                                const std::vector<Translation>& motion,
                                std::uint64_t seed);

// Antialiased bicubic downsample by spec.scale, clamped to [0,1].
VideoSequence degrade(const VideoSequence& seq, const DegradationSpec& spec);
Tensor degrade_frame(const Tensor& frame, const DegradationSpec& spec);

// One directory per sequence: frame_%06d.ppm (binary P6, maxval 255) plus a
// meta.json sidecar (fps, frame count, dims, motion_spec).
void write_frames(const std::filesystem::path& dir, const VideoSequence& seq);
VideoSequence read_frames(const std::filesystem::path& dir);

void write_ppm(const std::filesystem::path& file, const Tensor& frame);
Tensor read_ppm(const std::filesystem::path& file);

}  // namespace streamvsr::synth
