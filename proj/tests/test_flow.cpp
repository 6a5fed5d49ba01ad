// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "streamvsr/flow.hpp"

using namespace streamvsr;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("flow");

TEST_CASE("zero flow is the bitwise identity") {
  Rng rng(21);
  const Tensor img = Tensor::randn({3, 12, 12}, rng);
  const auto out = flow::warp(img, flow::FlowField(12, 12));
  CHECK(out.v == img.v);
}

TEST_CASE("constant unit flow shifts left and replicates the last column") {
  Rng rng(22);
  const Tensor img = Tensor::randn({1, 5, 7}, rng);
  const auto out =
      flow::warp(img, flow::FlowField::constant(5, 7, 1.0, 0.0));
  Tensor expected({1, 5, 7});
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x)
      expected.at(0, y, x) = img.at(0, y, std::min(x + 1, 6));
  CHECK(out.v == expected.v);
}

TEST_CASE("half-pixel flow on a linear ramp shifts the ramp exactly") {
  Tensor ramp({1, 4, 16});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 16; ++x) ramp.at(0, y, x) = x / 15.0;
  const auto out =
      flow::warp(ramp, flow::FlowField::constant(4, 16, 0.5, 0.0));
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 15; ++x)  // interior: sample stays in range
      CHECK(out.at(0, y, x) == doctest::Approx((x + 0.5) / 15.0).epsilon(1e-12));
}

TEST_CASE("warp is linear in the image argument") {
  Rng rng(23);
  const Tensor a = Tensor::randn({3, 10, 10}, rng);
  const Tensor b = Tensor::randn({3, 10, 10}, rng);
  flow::FlowField f(10, 10);
  for (auto& u : f.u) u = rng.uniform(-2, 2);
  for (auto& v : f.v) v = rng.uniform(-2, 2);
  Tensor combo = a * 0.3;
  axpy(combo, -1.7, b);
  const Tensor lhs = flow::warp(combo, f);
  Tensor rhs = flow::warp(a, f) * 0.3;
  axpy(rhs, -1.7, flow::warp(b, f));
  CHECK(max_abs_diff(lhs, rhs) < 1e-9);
}

TEST_CASE("zero border mode pulls in zeros") {
  const Tensor img = Tensor::full({1, 4, 4}, 1.0);
  const auto out = flow::warp(img, flow::FlowField::constant(4, 4, 10.0, 0.0),
                              flow::Border::zero);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("warp validates shapes and finiteness") {
  const Tensor img = Tensor::full({1, 4, 4}, 1.0);
  CHECK_THROWS_AS(flow::warp(img, flow::FlowField(5, 4)), DimensionError);
  flow::FlowField bad(4, 4);
  bad.u[3] = std::nan("");
  CHECK_THROWS_AS(flow::warp(img, bad), ArgumentError);
}

TEST_CASE("ground-truth flows for translations and affine identity") {
  auto zero = flow::gt_flow(synth::Translation{0, 0}, 6, 6);
  for (double u : zero.u) CHECK(u == 0.0);
  auto shift = flow::gt_flow(synth::Translation{2.5, -1.0}, 6, 6);
  for (double u : shift.u) CHECK(u == 2.5);
  for (double v : shift.v) CHECK(v == -1.0);
  auto ident = flow::gt_flow(synth::AffineMotion{}, 6, 6);
  for (double u : ident.u) CHECK(u == 0.0);
  for (double v : ident.v) CHECK(v == 0.0);
}

TEST_CASE("warping the previous frame with the exact flow lands on the next frame") {
  // integer translation: interior exact
  auto seq = synth::generate_sequence(synth::Pattern::checker, 2, 32, 32,
                                      {{2.0, 1.0}}, 4);
  auto f = flow::gt_flow(seq.motion->at(0), 32, 32);
  const auto warped = flow::warp(seq.frames[0], f);
  CHECK(oracles::interior_mae(warped, seq.frames[1], 4) < 1e-6);

  // subpixel translation on band-limited content: bilinear-accurate
  for (auto pattern :
       {synth::Pattern::gradient_blobs, synth::Pattern::texture_noise}) {
    auto s = synth::generate_sequence(pattern, 2, 64, 64, {{0.5, -0.25}}, 11);
    auto sf = flow::gt_flow(s.motion->at(0), 64, 64);
    const auto w = flow::warp(s.frames[0], sf);
    CHECK(oracles::interior_mae(w, s.frames[1], 3) < 2e-2);
  }
}

TEST_CASE("upscale_flow scales displacements and sizes") {
  auto up = flow::upscale_flow(flow::FlowField::constant(4, 4, 1.0, 0.0), 4);
  CHECK(up.h == 16);
  CHECK(up.w == 16);
  for (double u : up.u) CHECK(u == doctest::Approx(4.0).epsilon(1e-12));
  for (double v : up.v) CHECK(v == 0.0);

  auto zero = flow::upscale_flow(flow::FlowField(4, 4), 3);
  for (double u : zero.u) CHECK(u == 0.0);

  CHECK_THROWS_AS(flow::upscale_flow(flow::FlowField(4, 4), 0), ArgumentError);
}

TEST_CASE("upscale then block-average returns constant fields") {
  auto up = flow::upscale_flow(flow::FlowField::constant(6, 6, -0.75, 2.0), 4);
  // average each 4x4 block and divide by the scale
  for (int by = 0; by < 6; ++by)
    for (int bx = 0; bx < 6; ++bx) {
      double su = 0, sv = 0;
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          su += up.u_at(by * 4 + y, bx * 4 + x);
          sv += up.v_at(by * 4 + y, bx * 4 + x);
        }
      CHECK(su / 16.0 / 4.0 == doctest::Approx(-0.75).epsilon(1e-6));
      CHECK(sv / 16.0 / 4.0 == doctest::Approx(2.0).epsilon(1e-6));
    }
}

TEST_CASE("block matching recovers global shifts and handles edge cases") {
  auto seq = synth::generate_sequence(synth::Pattern::texture_noise, 2, 32, 32,
                                      {{2.0, 0.0}}, 17);
  const auto est =
      flow::estimate_flow_blockmatch(seq.frames[0], seq.frames[1], 8, 3);
  // interior blocks (periodic content, shift well inside the radius)
  int good = 0, total = 0;
  for (int by = 1; by < 3; ++by)
    for (int bx = 1; bx < 3; ++bx) {
      ++total;
      if (est.u_at(by * 8, bx * 8) == 2.0 && est.v_at(by * 8, bx * 8) == 0.0)
        ++good;
    }
  CHECK(good == total);

  const auto zero =
      flow::estimate_flow_blockmatch(seq.frames[0], seq.frames[0], 8, 3);
  for (double u : zero.u) CHECK(u == 0.0);

  const auto rzero =
      flow::estimate_flow_blockmatch(seq.frames[0], seq.frames[1], 8, 0);
  for (double u : rzero.u) CHECK(u == 0.0);

  CHECK_THROWS_AS(
      flow::estimate_flow_blockmatch(seq.frames[0], seq.frames[1], 64, 1),
      ArgumentError);
  CHECK_THROWS_AS(flow::estimate_flow_blockmatch(
                      seq.frames[0], Tensor::full({3, 16, 16}, 0.0), 8, 1),
                  DimensionError);
}

TEST_CASE("block matching recovers >= 95% of interior blocks (property)") {
  int good = 0, total = 0;
  for (int trial = 0; trial < 4; ++trial) {
    Rng rng(100 + trial);
    const int dx = static_cast<int>(rng.below(5)) - 2;
    const int dy = static_cast<int>(rng.below(5)) - 2;
    auto seq = synth::generate_sequence(
        synth::Pattern::texture_noise, 2, 48, 48,
        {{static_cast<double>(dx), static_cast<double>(dy)}}, 200 + trial);
    const auto est =
        flow::estimate_flow_blockmatch(seq.frames[0], seq.frames[1], 8, 3);
    for (int by = 1; by < 5; ++by)
      for (int bx = 1; bx < 5; ++bx) {
        ++total;
        if (est.u_at(by * 8, bx * 8) == dx && est.v_at(by * 8, bx * 8) == dy)
          ++good;
      }
  }
  CHECK(static_cast<double>(good) / total >= 0.95);
}

TEST_CASE("warp error is zero for static video and exact synthetic flows") {
  const Tensor frame = Tensor::full({3, 16, 16}, 0.6);
  std::vector<Tensor> frames = {frame, frame, frame};
  std::vector<flow::FlowField> flows = {flow::FlowField(16, 16),
                                        flow::FlowField(16, 16)};
  CHECK(flow::warp_error(frames, flows) == 0.0);

  auto seq = synth::generate_sequence(synth::Pattern::checker, 3, 32, 32,
                                      {{1.0, 0.0}, {0.0, 2.0}}, 5);
  const auto gt = flow::gt_flows_for(seq);
  CHECK(flow::warp_error(seq.frames, gt) < 1e-9);
}

TEST_CASE("warp error of a corrupted frame matches the direct formula") {
  auto seq = synth::generate_sequence(synth::Pattern::checker, 2, 16, 16,
                                      {{0.0, 0.0}}, 6);
  std::vector<Tensor> out = {seq.frames[0], Tensor::full({3, 16, 16}, 0.5)};
  std::vector<flow::FlowField> flows = {flow::FlowField(16, 16)};
  // zero flow => warp identity; expected = 255 * MAE(gray, frame0)
  double expected = 0;
  for (std::size_t i = 0; i < out[0].v.size(); ++i)
    expected += std::fabs(0.5 - out[0].v[i]);
  expected = 255.0 * expected / out[0].v.size();
  CHECK(flow::warp_error(out, flows) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(flow::warp_error(out, flows) > 0.0);
}

TEST_CASE("warp error validates the flow count") {
  std::vector<Tensor> frames = {Tensor::full({3, 8, 8}, 0.1),
                                Tensor::full({3, 8, 8}, 0.1)};
  std::vector<flow::FlowField> flows;
  CHECK_THROWS_AS(flow::warp_error(frames, flows), ArgumentError);
}

TEST_CASE(".flo round trip and magic validation") {
  Rng rng(31);
  flow::FlowField f(6, 9);
  for (auto& u : f.u) u = rng.uniform(-8, 8);
  for (auto& v : f.v) v = rng.uniform(-8, 8);
  const auto dir = fs::temp_directory_path() / "streamvsr_tests" / "flo";
  fs::create_directories(dir);
  flow::write_flo(dir / "f.flo", f);
  const auto back = flow::read_flo(dir / "f.flo");
  CHECK(back.h == 6);
  CHECK(back.w == 9);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    CHECK(back.u[i] == doctest::Approx(f.u[i]).epsilon(1e-6));
    CHECK(back.v[i] == doctest::Approx(f.v[i]).epsilon(1e-6));
  }

  std::ofstream bad(dir / "bad.flo", std::ios::binary);
  const float wrong = 1234.5f;
  bad.write(reinterpret_cast<const char*>(&wrong), 4);
  bad.close();
  CHECK_THROWS_AS(flow::read_flo(dir / "bad.flo"), ParseError);
}

TEST_SUITE_END();
