// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/video_synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "streamvsr/errors.hpp"
#include "streamvsr/kernels.hpp"
#include "streamvsr/rng.hpp"

namespace streamvsr::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Patterns are smooth, periodic, closed-form functions of continuous
// coordinates. Band limits are chosen so that bilinear resampling of a
// half-pixel shift stays well under the 2e-2 mean-error budget.
struct PatternField {
  Pattern kind;
  int h = 0, w = 0;
  // checker
  double cell = 8.0, sharp = 2.0, amp = 0.35;
  // texture-noise / blob components
  struct Wave {
    double mx, ny, phase, amp;
  };
  std::vector<Wave> waves[3];  // per channel
  struct Blob {
    double cx, cy, kx, ky, amp;
  };
  std::vector<Blob> blobs;
  double chan_phase[3] = {0.0, 0.0, 0.0};

  double eval(int ch, double x, double y) const {
    switch (kind) {
      case Pattern::checker: {
        const double u = std::sin(2.0 * kPi * (x + chan_phase[ch]) / (2.0 * cell));
        const double v = std::sin(2.0 * kPi * y / (2.0 * cell));
        return 0.5 + amp * std::tanh(sharp * u) * std::tanh(sharp * v);
      }
      case Pattern::texture_noise: {
        double s = 0.0, norm = 0.0;
        for (const auto& wv : waves[ch]) {
          s += wv.amp * std::sin(2.0 * kPi * (wv.mx * x / w + wv.ny * y / h) +
                                 wv.phase);
          norm += std::fabs(wv.amp);
        }
        return 0.5 + 0.4 * (norm > 0 ? s / norm : 0.0);
      }
      case Pattern::gradient_blobs: {
        // Periodic von-Mises style bumps over a low-frequency background.
        double s = 0.0;
        for (const auto& b : blobs) {
          const double ex = b.kx * (std::cos(2.0 * kPi * (x - b.cx) / w) - 1.0);
          const double ey = b.ky * (std::cos(2.0 * kPi * (y - b.cy) / h) - 1.0);
          s += b.amp * std::exp(ex + ey);
        }
        const double bg =
            0.15 * std::sin(2.0 * kPi * x / w + chan_phase[ch]) +
            0.1 * std::sin(2.0 * kPi * y / h + 1.7 * chan_phase[ch]);
        const double raw = bg + s;
        return 0.5 + 0.45 * std::tanh(raw);
      }
    }
    return 0.5;
  }
};

PatternField make_field(Pattern p, int h, int w, std::uint64_t seed) {
  PatternField f;
  f.kind = p;
  f.h = h;
  f.w = w;
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 12345);
  switch (p) {
    case Pattern::checker:
      f.cell = 8.0;
      f.sharp = 2.0;
      f.amp = 0.3 + 0.1 * rng.uniform();
      for (auto& cp : f.chan_phase) cp = rng.uniform(0.0, 4.0);
      break;
    case Pattern::texture_noise: {
      const int max_cycles_x = std::max(1, w / 16);
      const int max_cycles_y = std::max(1, h / 16);
      for (int ch = 0; ch < 3; ++ch) {
        for (int j = 0; j < 6; ++j) {
          PatternField::Wave wv;
          wv.mx = static_cast<double>(rng.below(2 * max_cycles_x + 1)) -
                  max_cycles_x;
          wv.ny = static_cast<double>(rng.below(2 * max_cycles_y + 1)) -
                  max_cycles_y;
          if (wv.mx == 0 && wv.ny == 0) wv.mx = 1;
          wv.phase = rng.uniform(0.0, 2.0 * kPi);
          wv.amp = 0.3 + rng.uniform();
          f.waves[ch].push_back(wv);
        }
      }
      break;
    }
    case Pattern::gradient_blobs: {
      const int n = 3 + static_cast<int>(rng.below(3));
      for (int j = 0; j < n; ++j) {
        PatternField::Blob b;
        b.cx = rng.uniform(0.0, w);
        b.cy = rng.uniform(0.0, h);
        b.kx = 2.0 + 4.0 * rng.uniform();
        b.ky = 2.0 + 4.0 * rng.uniform();
        b.amp = rng.uniform(-1.0, 1.0);
        f.blobs.push_back(b);
      }
      for (auto& cp : f.chan_phase) cp = rng.uniform(0.0, 2.0 * kPi);
      break;
    }
  }
  return f;
}

}  // namespace

Pattern pattern_from_string(const std::string& s) {
  if (s == "checker") return Pattern::checker;
  if (s == "gradient-blobs") return Pattern::gradient_blobs;
  if (s == "texture-noise") return Pattern::texture_noise;
  throw ArgumentError("unknown pattern: " + s);
}

std::string pattern_to_string(Pattern p) {
  switch (p) {
    case Pattern::checker: return "checker";
    case Pattern::gradient_blobs: return "gradient-blobs";
    case Pattern::texture_noise: return "texture-noise";
  }
  return "?";
}

VideoSequence generate_sequence(Pattern pattern, int t, int h, int w,
                                const std::vector<Translation>& motion,
                                std::uint64_t seed) {
  if (t < 1) throw ArgumentError("generate_sequence: need T >= 1");
  if (h % 8 != 0 || w % 8 != 0)
    throw DimensionError("generate_sequence: H and W must be multiples of 8");
  if (static_cast<int>(motion.size()) != t - 1)
    throw ArgumentError("generate_sequence: motion list must have T-1 entries");
  for (const auto& m : motion)
    if (!std::isfinite(m.dx) || !std::isfinite(m.dy))
      throw ArgumentError("generate_sequence: non-finite displacement");

  const PatternField field = make_field(pattern, h, w, seed);
  VideoSequence seq;
  seq.fps = 24.0;
  double offx = 0.0, offy = 0.0;
  std::vector<MotionStep> steps;
  for (int fi = 0; fi < t; ++fi) {
    if (fi > 0) {
      offx += motion[fi - 1].dx;
      offy += motion[fi - 1].dy;
      steps.emplace_back(motion[fi - 1]);
    }
    Tensor frame({3, h, w});
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double v = field.eval(ch, x + offx, y + offy);
          if (v < 0.0) v = 0.0;
          if (v > 1.0) v = 1.0;
          frame.at(ch, y, x) = v;
        }
    seq.frames.push_back(std::move(frame));
  }
  seq.motion = std::move(steps);
  return seq;
}

Tensor degrade_frame(const Tensor& frame, const DegradationSpec& spec) {
  if (spec.scale < 1) throw ArgumentError("degrade: scale must be >= 1");
  if (frame.h() % spec.scale != 0 || frame.w() % spec.scale != 0)
    throw DimensionError("degrade: dimensions not divisible by scale");
  Tensor out({frame.c(), frame.h() / spec.scale, frame.w() / spec.scale});
  kernels::bicubic_downsample(frame.c(), frame.h(), frame.w(), spec.scale,
                              frame.v.data(), out.v.data());
  return clamp01(std::move(out));
}

VideoSequence degrade(const VideoSequence& seq, const DegradationSpec& spec) {
  VideoSequence out;
  out.fps = seq.fps;
  // LQ-resolution motion scales down with the frame.
  if (seq.motion) {
    std::vector<MotionStep> scaled;
    for (const auto& step : *seq.motion) {
      if (const auto* tr = std::get_if<Translation>(&step)) {
        scaled.emplace_back(
            Translation{tr->dx / spec.scale, tr->dy / spec.scale});
      } else {
        auto af = std::get<AffineMotion>(step);
        af.tx /= spec.scale;
        af.ty /= spec.scale;
        scaled.emplace_back(af);
      }
    }
    out.motion = std::move(scaled);
  }
  for (const auto& f : seq.frames) out.frames.push_back(degrade_frame(f, spec));
  return out;
}

void write_ppm(const std::filesystem::path& file, const Tensor& frame) {
  if (frame.dims.size() != 3 || frame.c() != 3)
    throw DimensionError("write_ppm: expected {3,H,W}");
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + file.string());
  out << "P6\n" << frame.w() << " " << frame.h() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(frame.w()) * 3);
  for (int y = 0; y < frame.h(); ++y) {
    for (int x = 0; x < frame.w(); ++x)
      for (int ch = 0; ch < 3; ++ch) {
        double v = frame.at(ch, y, x);
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        row[static_cast<std::size_t>(x) * 3 + ch] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("PPM write failed: " + file.string());
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments; tracks the
// byte offset for error reporting.
std::string next_token(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])))
    ++pos;
  return buf.substr(start, pos - start);
}

int parse_int_token(const std::string& buf, std::size_t& pos,
                    const char* what) {
  const std::size_t at = pos;
  const std::string tok = next_token(buf, pos);
  if (tok.empty()) throw ParseError(std::string("missing ") + what, at);
  try {
    return std::stoi(tok);
  } catch (...) {
    throw ParseError(std::string("bad ") + what + ": " + tok, at);
  }
}

}  // namespace

Tensor read_ppm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open: " + file.string());
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  const std::string magic = next_token(buf, pos);
  if (magic != "P6") throw ParseError("bad PPM magic '" + magic + "'", 0);
  const int w = parse_int_token(buf, pos, "width");
  const int h = parse_int_token(buf, pos, "height");
  const int maxval = parse_int_token(buf, pos, "maxval");
  if (w <= 0 || h <= 0) throw ParseError("non-positive dimensions", pos);
  if (maxval != 255) throw ParseError("unsupported maxval (want 255)", pos);
  if (pos >= buf.size()) throw ParseError("missing pixel data", pos);
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (buf.size() - pos < need)
    throw ParseError("truncated pixel data", buf.size());
  Tensor frame({3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch)
        frame.at(ch, y, x) =
            static_cast<unsigned char>(
                buf[pos + (static_cast<std::size_t>(y) * w + x) * 3 + ch]) /
            255.0;
  return frame;
}

namespace {

nlohmann::json motion_to_json(const std::vector<MotionStep>& steps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& step : steps) {
    nlohmann::json j;
    if (const auto* tr = std::get_if<Translation>(&step)) {
      j["type"] = "translation";
      j["dx"] = tr->dx;
      j["dy"] = tr->dy;
    } else {
      const auto& af = std::get<AffineMotion>(step);
      j["type"] = "affine";
      j["matrix"] = {af.a, af.b, af.c, af.d};
      j["offset"] = {af.tx, af.ty};
    }
    arr.push_back(j);
  }
  return arr;
}

std::vector<MotionStep> motion_from_json(const nlohmann::json& arr) {
  std::vector<MotionStep> steps;
  for (const auto& j : arr) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "translation") {
      steps.emplace_back(Translation{j.at("dx").get<double>(),
                                     j.at("dy").get<double>()});
    } else if (type == "affine") {
      AffineMotion af;
      const auto m = j.at("matrix").get<std::vector<double>>();
      const auto o = j.at("offset").get<std::vector<double>>();
      if (m.size() != 4 || o.size() != 2)
        throw ArgumentError("affine motion: bad matrix/offset arity");
      af.a = m[0];
      af.b = m[1];
      af.c = m[2];
      af.d = m[3];
      af.tx = o[0];
      af.ty = o[1];
      steps.emplace_back(af);
    } else {
      throw UnsupportedMotionError("unsupported motion type: " + type);
    }
  }
  return steps;
}

}  // namespace

void write_frames(const std::filesystem::path& dir, const VideoSequence& seq) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (int i = 0; i < seq.t(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%06d.ppm", i);
    write_ppm(dir / name, seq.frames[i]);
  }
  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["fps"] = seq.fps;
  meta["frames"] = seq.t();
  meta["height"] = seq.h();
  meta["width"] = seq.w();
  meta["motion_spec"] =
      seq.motion ? motion_to_json(*seq.motion) : nlohmann::json(nullptr);
  std::ofstream ms(dir / "meta.json", std::ios::trunc);
  if (!ms) throw IoError("cannot write meta.json in " + dir.string());
  ms << meta.dump(2) << "\n";
}

VideoSequence read_frames(const std::filesystem::path& dir) {
  std::ifstream ms(dir / "meta.json");
  if (!ms) throw IoError("missing meta.json in " + dir.string());
  nlohmann::json meta;
  try {
    ms >> meta;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("meta.json: ") + e.what(), e.byte);
  }
  VideoSequence seq;
  seq.fps = meta.at("fps").get<double>();
  const int t = meta.at("frames").get<int>();
  char name[32];
  for (int i = 0; i < t; ++i) {
    std::snprintf(name, sizeof(name), "frame_%06d.ppm", i);
    seq.frames.push_back(read_ppm(dir / name));
  }
  if (!meta.at("motion_spec").is_null())
    seq.motion = motion_from_json(meta.at("motion_spec"));
  const int hh = meta.at("height").get<int>(), ww = meta.at("width").get<int>();
  if (t > 0 && (seq.h() != hh || seq.w() != ww))
    throw ParseError("meta.json dims disagree with frames", 0);
  return seq;
}

}  // namespace streamvsr::synth
