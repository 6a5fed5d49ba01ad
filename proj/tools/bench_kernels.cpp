// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference against the OpenMP backend for the hot kernels
// and checks that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "streamvsr/kernels.hpp"
#include "streamvsr/rng.hpp"
#include "streamvsr/tensor.hpp"

using namespace streamvsr;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void report(const char* name, double serial_ms, double par_ms, double diff) {
  std::printf("%-24s serial %8.3f ms   openmp %8.3f ms   speedup %5.2fx   max|d| %g\n",
              name, serial_ms, par_ms, serial_ms / par_ms, diff);
}

}  // namespace

int main() {
  Rng rng(42);

  // conv2d on a mid-sized feature map
  kernels::Conv2dShape s;
  s.ci = 32;
  s.hi = 64;
  s.wi = 64;
  s.co = 32;
  const Tensor x = Tensor::randn({s.ci, s.hi, s.wi}, rng);
  const Tensor w = Tensor::randn({s.co, s.ci, 3, 3}, rng);
  const Tensor b = Tensor::randn({s.co}, rng);
  Tensor y_serial({s.co, s.ho(), s.wo()});
  Tensor y_par = y_serial;

  report("conv2d_fwd",
         time_ms([&] { kernels::serial::conv2d_fwd(s, x.v.data(), w.v.data(),
                                                   b.v.data(), y_serial.v.data()); },
                 3),
         time_ms([&] { kernels::par::conv2d_fwd(s, x.v.data(), w.v.data(),
                                                b.v.data(), y_par.v.data()); },
                 3),
         max_abs(y_serial.v, y_par.v));

  const Tensor gy = Tensor::randn({s.co, s.ho(), s.wo()}, rng);
  Tensor gx_serial({s.ci, s.hi, s.wi}), gx_par({s.ci, s.hi, s.wi});
  report("conv2d_bwd_input",
         time_ms([&] {
           std::fill(gx_serial.v.begin(), gx_serial.v.end(), 0.0);
           kernels::serial::conv2d_bwd_input(s, gy.v.data(), w.v.data(),
                                             gx_serial.v.data());
         }, 3),
         time_ms([&] {
           std::fill(gx_par.v.begin(), gx_par.v.end(), 0.0);
           kernels::par::conv2d_bwd_input(s, gy.v.data(), w.v.data(),
                                          gx_par.v.data());
         }, 3),
         max_abs(gx_serial.v, gx_par.v));

  Tensor gw_serial({s.co, s.ci, 3, 3}), gw_par({s.co, s.ci, 3, 3});
  Tensor gb_serial({s.co}), gb_par({s.co});
  report("conv2d_bwd_weight",
         time_ms([&] {
           std::fill(gw_serial.v.begin(), gw_serial.v.end(), 0.0);
           std::fill(gb_serial.v.begin(), gb_serial.v.end(), 0.0);
           kernels::serial::conv2d_bwd_weight(s, gy.v.data(), x.v.data(),
                                              gw_serial.v.data(),
                                              gb_serial.v.data());
         }, 3),
         time_ms([&] {
           std::fill(gw_par.v.begin(), gw_par.v.end(), 0.0);
           std::fill(gb_par.v.begin(), gb_par.v.end(), 0.0);
           kernels::par::conv2d_bwd_weight(s, gy.v.data(), x.v.data(),
                                           gw_par.v.data(), gb_par.v.data());
         }, 3),
         max_abs(gw_serial.v, gw_par.v));

  // warp on a large frame
  const int H = 512, W = 512;
  const Tensor img = Tensor::randn({3, H, W}, rng);
  std::vector<double> u(static_cast<std::size_t>(H) * W), v(u.size());
  for (auto& e : u) e = rng.uniform(-3.0, 3.0);
  for (auto& e : v) e = rng.uniform(-3.0, 3.0);
  Tensor warp_serial({3, H, W}), warp_par({3, H, W});
  report("warp_bilinear",
         time_ms([&] { kernels::serial::warp_bilinear(
                           3, H, W, img.v.data(), u.data(), v.data(),
                           kernels::Border::replicate, warp_serial.v.data()); },
                 5),
         time_ms([&] { kernels::par::warp_bilinear(
                           3, H, W, img.v.data(), u.data(), v.data(),
                           kernels::Border::replicate, warp_par.v.data()); },
                 5),
         max_abs(warp_serial.v, warp_par.v));

  // antialiased bicubic x4
  Tensor down_serial({3, H / 4, W / 4}), down_par({3, H / 4, W / 4});
  report("bicubic_downsample",
         time_ms([&] { kernels::serial::bicubic_downsample(
                           3, H, W, 4, img.v.data(), down_serial.v.data()); },
                 3),
         time_ms([&] { kernels::par::bicubic_downsample(
                           3, H, W, 4, img.v.data(), down_par.v.data()); },
                 3),
         max_abs(down_serial.v, down_par.v));

  // block-matching flow
  const Tensor prev = Tensor::randn({3, 128, 128}, rng);
  const Tensor curr = Tensor::randn({3, 128, 128}, rng);
  std::vector<double> u1(128 * 128), v1(128 * 128), u2(128 * 128), v2(128 * 128);
  report("block_sad_flow",
         time_ms([&] { kernels::serial::block_sad_flow(
                           3, 128, 128, prev.v.data(), curr.v.data(), 8, 4,
                           u1.data(), v1.data()); },
                 3),
         time_ms([&] { kernels::par::block_sad_flow(
                           3, 128, 128, prev.v.data(), curr.v.data(), 8, 4,
                           u2.data(), v2.data()); },
                 3),
         std::max(max_abs(u1, u2), max_abs(v1, v2)));

  return 0;
}
