// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "streamvsr/video_synth.hpp"

using namespace streamvsr;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("video-synth");

namespace {
fs::path temp_dir(const char* name) {
  auto p = fs::temp_directory_path() / "streamvsr_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("zero motion repeats the first frame exactly") {
  auto seq = synth::generate_sequence(synth::Pattern::checker, 2, 32, 32,
                                      {{0.0, 0.0}}, 7);
  REQUIRE(seq.t() == 2);
  CHECK(seq.frames[0].v == seq.frames[1].v);
}

TEST_CASE("unit shift matches the periodic brute-force shift") {
  auto seq = synth::generate_sequence(synth::Pattern::checker, 2, 32, 32,
                                      {{1.0, 0.0}}, 7);
  const Tensor expected = oracles::shift_periodic(seq.frames[0], 1, 0);
  CHECK(max_abs_diff(seq.frames[1], expected) < 1e-9);

  auto seq2 = synth::generate_sequence(synth::Pattern::texture_noise, 3, 32, 40,
                                       {{2.0, -1.0}, {-1.0, 3.0}}, 9);
  CHECK(max_abs_diff(seq2.frames[1],
                     oracles::shift_periodic(seq2.frames[0], 2, -1)) < 1e-9);
  CHECK(max_abs_diff(seq2.frames[2],
                     oracles::shift_periodic(seq2.frames[1], -1, 3)) < 1e-9);
}

TEST_CASE("gradient blobs stay in range under subpixel motion") {
  std::vector<synth::Translation> motion(4, {0.5, 0.25});
  auto seq = synth::generate_sequence(synth::Pattern::gradient_blobs, 5, 64, 64,
                                      motion, 3);
  REQUIRE(seq.t() == 5);
  for (const auto& f : seq.frames)
    for (double v : f.v) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("generation is deterministic per seed") {
  auto a = synth::generate_sequence(synth::Pattern::texture_noise, 3, 32, 32,
                                    {{1, 0}, {0, 1}}, 42);
  auto b = synth::generate_sequence(synth::Pattern::texture_noise, 3, 32, 32,
                                    {{1, 0}, {0, 1}}, 42);
  auto c = synth::generate_sequence(synth::Pattern::texture_noise, 3, 32, 32,
                                    {{1, 0}, {0, 1}}, 43);
  CHECK(content_hash(a.frames[2]) == content_hash(b.frames[2]));
  CHECK(content_hash(a.frames[2]) != content_hash(c.frames[2]));
}

TEST_CASE("bad dimensions and motion lists are rejected") {
  CHECK_THROWS_AS(synth::generate_sequence(synth::Pattern::checker, 2, 30, 32,
                                           {{0, 0}}, 1),
                  DimensionError);
  CHECK_THROWS_AS(synth::generate_sequence(synth::Pattern::checker, 3, 32, 32,
                                           {{0, 0}}, 1),
                  ArgumentError);
  CHECK_THROWS_AS(
      synth::generate_sequence(synth::Pattern::checker, 2, 32, 32,
                               {{std::nan(""), 0}}, 1),
      ArgumentError);
}

TEST_CASE("degrading a constant frame keeps the constant") {
  synth::VideoSequence seq;
  seq.frames.push_back(Tensor::full({3, 64, 64}, 0.42));
  auto lq = synth::degrade(seq, synth::DegradationSpec{});
  REQUIRE(lq.frames[0].dims == std::vector<int>{3, 16, 16});
  for (double v : lq.frames[0].v) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("degrade quarters the spatial dims and scales motion") {
  auto seq = synth::generate_sequence(synth::Pattern::gradient_blobs, 2, 32, 48,
                                      {{2.0, 1.0}}, 5);
  auto lq = synth::degrade(seq, synth::DegradationSpec{});
  CHECK(lq.h() == 8);
  CHECK(lq.w() == 12);
  REQUIRE(lq.motion.has_value());
  const auto& tr = std::get<synth::Translation>(lq.motion->at(0));
  CHECK(tr.dx == doctest::Approx(0.5));
  CHECK(tr.dy == doctest::Approx(0.25));
}

TEST_CASE("degraded hard checker matches the direct resampling oracle") {
  // cell size 8 -> cell size 2 after x4; compare against the separable
  // reference and check the alternating structure survives.
  Tensor frame({3, 32, 32});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        frame.at(c, y, x) = ((x / 8 + y / 8) % 2 == 0) ? 0.9 : 0.1;
  const Tensor ref = oracles::bicubic_ref(frame, 4);
  const Tensor got = synth::degrade_frame(frame, synth::DegradationSpec{});
  CHECK(max_abs_diff(got, clamp01(ref)) < 1e-9);
  // period-2 structure: 2x2 output cells alternate around mid-gray
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool expect_hi = ((x / 2 + y / 2) % 2) == 0;
      CHECK((got.at(0, y, x) > 0.5) == expect_hi);
    }
}

TEST_CASE("scale 1 is the identity; shape idempotence holds") {
  Rng rng(8);
  synth::VideoSequence seq;
  seq.frames.push_back(clamp01(Tensor::randn({3, 16, 16}, rng) * 0.2 +
                               Tensor::full({3, 16, 16}, 0.5)));
  synth::DegradationSpec s1{1, "bicubic-aa"}, s4{4, "bicubic-aa"};
  auto once = synth::degrade(seq, s1);
  CHECK(once.frames[0].v == seq.frames[0].v);
  auto a = synth::degrade(synth::degrade(seq, s1), s4);
  auto b = synth::degrade(seq, s4);
  CHECK(a.frames[0].v == b.frames[0].v);
}

TEST_CASE("degrade rejects non-divisible dims") {
  synth::VideoSequence seq;
  seq.frames.push_back(Tensor::full({3, 30, 32}, 0.5));
  CHECK_THROWS_AS(synth::degrade(seq, synth::DegradationSpec{}), DimensionError);
}

TEST_CASE("PPM round trip stays within the quantization step") {
  Rng rng(19);
  Tensor frame({3, 12, 20});
  for (auto& v : frame.v) v = rng.uniform();
  const auto dir = temp_dir("ppm_roundtrip");
  synth::write_ppm(dir / "f.ppm", frame);
  const Tensor back = synth::read_ppm(dir / "f.ppm");
  CHECK(max_abs_diff(frame, back) <= 1.0 / 255.0);
}

TEST_CASE("wrong magic reports a parse error with the offset") {
  const auto dir = temp_dir("ppm_magic");
  std::ofstream out(dir / "bad.ppm", std::ios::binary);
  out << "P5\n4 4\n255\n";
  for (int i = 0; i < 16; ++i) out.put('\0');
  out.close();
  try {
    synth::read_ppm(dir / "bad.ppm");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 0);
  }
}

TEST_CASE("truncated pixel payload is rejected") {
  const auto dir = temp_dir("ppm_trunc");
  std::ofstream out(dir / "t.ppm", std::ios::binary);
  out << "P6\n4 4\n255\n";
  out.put('\0');  // far too short
  out.close();
  CHECK_THROWS_AS(synth::read_ppm(dir / "t.ppm"), ParseError);
}

TEST_CASE("sequence directory round trip preserves the sidecar") {
  auto seq = synth::generate_sequence(synth::Pattern::checker, 2, 8, 8,
                                      {{1.0, 0.0}}, 3);
  seq.fps = 30.0;
  const auto dir = temp_dir("seq_roundtrip");
  synth::write_frames(dir, seq);

  std::ifstream ms(dir / "meta.json");
  nlohmann::json meta;
  ms >> meta;
  CHECK(meta.at("frames") == 2);
  CHECK(meta.at("height") == 8);
  CHECK(meta.at("width") == 8);
  CHECK(meta.at("fps") == 30.0);

  const auto back = synth::read_frames(dir);
  CHECK(back.t() == 2);
  CHECK(back.fps == 30.0);
  REQUIRE(back.motion.has_value());
  const auto& tr = std::get<synth::Translation>(back.motion->at(0));
  CHECK(tr.dx == 1.0);
  CHECK(max_abs_diff(back.frames[0], seq.frames[0]) <= 1.0 / 255.0);
}

TEST_SUITE_END();
