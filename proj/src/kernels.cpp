// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace streamvsr::kernels {

namespace {

Backend initial_backend() {
  if (const char* env = std::getenv("STREAMVSR_BACKEND")) {
    if (std::strcmp(env, "serial") == 0) return Backend::serial;
  }
  return Backend::parallel;
}

std::atomic<Backend> g_backend{initial_backend()};

}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

double cubic_keys(double x) {
  const double a = -0.5;
  x = std::fabs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

void conv2d_fwd(const Conv2dShape& s, const double* x, const double* w,
                const double* b, double* y) {
  if (backend() == Backend::serial)
    serial::conv2d_fwd(s, x, w, b, y);
  else
    par::conv2d_fwd(s, x, w, b, y);
}

void conv2d_bwd_input(const Conv2dShape& s, const double* gy, const double* w,
                      double* gx) {
  if (backend() == Backend::serial)
    serial::conv2d_bwd_input(s, gy, w, gx);
  else
    par::conv2d_bwd_input(s, gy, w, gx);
}

void conv2d_bwd_weight(const Conv2dShape& s, const double* gy, const double* x,
                       double* gw, double* gb) {
  if (backend() == Backend::serial)
    serial::conv2d_bwd_weight(s, gy, x, gw, gb);
  else
    par::conv2d_bwd_weight(s, gy, x, gw, gb);
}

void warp_bilinear(int c, int h, int w, const double* img, const double* u,
                   const double* v, Border border, double* out) {
  if (backend() == Backend::serial)
    serial::warp_bilinear(c, h, w, img, u, v, border, out);
  else
    par::warp_bilinear(c, h, w, img, u, v, border, out);
}

void bicubic_downsample(int c, int h, int w, int scale, const double* img,
                        double* out) {
  if (backend() == Backend::serial)
    serial::bicubic_downsample(c, h, w, scale, img, out);
  else
    par::bicubic_downsample(c, h, w, scale, img, out);
}

void block_sad_flow(int c, int h, int w, const double* prev,
                    const double* curr, int block, int radius, double* u,
                    double* v) {
  if (backend() == Backend::serial)
    serial::block_sad_flow(c, h, w, prev, curr, block, radius, u, v);
  else
    par::block_sad_flow(c, h, w, prev, curr, block, radius, u, v);
}

void resize_bilinear(int c, int hi, int wi, int ho, int wo, const double* in,
                     double* out) {
  const double sy = static_cast<double>(hi) / ho;
  const double sx = static_cast<double>(wi) / wo;
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = in + static_cast<std::size_t>(ch) * hi * wi;
    double* oplane = out + static_cast<std::size_t>(ch) * ho * wo;
    for (int y = 0; y < ho; ++y) {
      double fy = (y + 0.5) * sy - 0.5;
      if (fy < 0) fy = 0;
      if (fy > hi - 1) fy = hi - 1;
      const int y0 = static_cast<int>(fy);
      const int y1 = y0 + 1 < hi ? y0 + 1 : hi - 1;
      const double ay = fy - y0;
      for (int x = 0; x < wo; ++x) {
        double fx = (x + 0.5) * sx - 0.5;
        if (fx < 0) fx = 0;
        if (fx > wi - 1) fx = wi - 1;
        const int x0 = static_cast<int>(fx);
        const int x1 = x0 + 1 < wi ? x0 + 1 : wi - 1;
        const double ax = fx - x0;
        oplane[static_cast<std::size_t>(y) * wo + x] =
            (1.0 - ay) * ((1.0 - ax) * plane[static_cast<std::size_t>(y0) * wi + x0] +
                          ax * plane[static_cast<std::size_t>(y0) * wi + x1]) +
            ay * ((1.0 - ax) * plane[static_cast<std::size_t>(y1) * wi + x0] +
                  ax * plane[static_cast<std::size_t>(y1) * wi + x1]);
      }
    }
  }
}

void avgpool_fwd(int c, int h, int w, int k, const double* x, double* y) {
  const int oh = h / k, ow = w / k;
  const double inv = 1.0 / (k * k);
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = x + static_cast<std::size_t>(ch) * h * w;
    double* oplane = y + static_cast<std::size_t>(ch) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx)
            acc += plane[static_cast<std::size_t>(oy * k + dy) * w + ox * k + dx];
        oplane[static_cast<std::size_t>(oy) * ow + ox] = acc * inv;
      }
    }
  }
}

void avgpool_bwd(int c, int h, int w, int k, const double* gy, double* gx) {
  const int oh = h / k, ow = w / k;
  const double inv = 1.0 / (k * k);
  for (int ch = 0; ch < c; ++ch) {
    const double* gplane = gy + static_cast<std::size_t>(ch) * oh * ow;
    double* xplane = gx + static_cast<std::size_t>(ch) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = gplane[static_cast<std::size_t>(oy) * ow + ox] * inv;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx)
            xplane[static_cast<std::size_t>(oy * k + dy) * w + ox * k + dx] += g;
      }
    }
  }
}

void upsample2_fwd(int c, int h, int w, const double* x, double* y) {
  const int oh = 2 * h, ow = 2 * w;
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = x + static_cast<std::size_t>(ch) * h * w;
    double* oplane = y + static_cast<std::size_t>(ch) * oh * ow;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        oplane[static_cast<std::size_t>(oy) * ow + ox] =
            plane[static_cast<std::size_t>(oy / 2) * w + ox / 2];
  }
}

void upsample2_bwd(int c, int h, int w, const double* gy, double* gx) {
  const int oh = 2 * h, ow = 2 * w;
  for (int ch = 0; ch < c; ++ch) {
    const double* gplane = gy + static_cast<std::size_t>(ch) * oh * ow;
    double* xplane = gx + static_cast<std::size_t>(ch) * h * w;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        xplane[static_cast<std::size_t>(oy / 2) * w + ox / 2] +=
            gplane[static_cast<std::size_t>(oy) * ow + ox];
  }
}

}  // namespace streamvsr::kernels
