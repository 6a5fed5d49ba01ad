// SPDX-License-Identifier: Apache-2.0
//
// OpenMP backend. Work is split over independent output elements only, and
// each output keeps the reference accumulation order, so results match the
// serial backend bit for bit at any thread count.

#include <algorithm>
#include <cmath>

#include "streamvsr/kernels.hpp"

#if !defined(_OPENMP)
#pragma GCC diagnostic ignored "-Wunknown-pragmas"
#endif

namespace streamvsr::kernels::par {

void conv2d_fwd(const Conv2dShape& s, const double* x, const double* w,
                const double* b, double* y) {
  const int ho = s.ho(), wo = s.wo();
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.co; ++oc) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b ? b[oc] : 0.0;
        for (int ic = 0; ic < s.ci; ++ic) {
          const double* xp = x + static_cast<std::size_t>(ic) * s.hi * s.wi;
          const double* wp =
              w + (static_cast<std::size_t>(oc) * s.ci + ic) * s.kh * s.kw;
          for (int ky = 0; ky < s.kh; ++ky) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.hi) continue;
            for (int kx = 0; kx < s.kw; ++kx) {
              const int ix = ox * s.stride - s.pad + kx;
              if (ix < 0 || ix >= s.wi) continue;
              acc += xp[static_cast<std::size_t>(iy) * s.wi + ix] *
                     wp[static_cast<std::size_t>(ky) * s.kw + kx];
            }
          }
        }
        y[(static_cast<std::size_t>(oc) * ho + oy) * wo + ox] = acc;
      }
    }
  }
}

void conv2d_bwd_input(const Conv2dShape& s, const double* gy, const double* w,
                      double* gx) {
  const int ho = s.ho(), wo = s.wo();
#pragma omp parallel for collapse(2) schedule(static)
  for (int ic = 0; ic < s.ci; ++ic) {
    for (int iy = 0; iy < s.hi; ++iy) {
      for (int ix = 0; ix < s.wi; ++ix) {
        double acc = 0.0;
        for (int oc = 0; oc < s.co; ++oc) {
          const double* gp = gy + static_cast<std::size_t>(oc) * ho * wo;
          const double* wp =
              w + (static_cast<std::size_t>(oc) * s.ci + ic) * s.kh * s.kw;
          for (int ky = 0; ky < s.kh; ++ky) {
            const int ny = iy + s.pad - ky;
            if (ny % s.stride != 0) continue;
            const int oy = ny / s.stride;
            if (oy < 0 || oy >= ho) continue;
            for (int kx = 0; kx < s.kw; ++kx) {
              const int nx = ix + s.pad - kx;
              if (nx % s.stride != 0) continue;
              const int ox = nx / s.stride;
              if (ox < 0 || ox >= wo) continue;
              acc += gp[static_cast<std::size_t>(oy) * wo + ox] *
                     wp[static_cast<std::size_t>(ky) * s.kw + kx];
            }
          }
        }
        gx[(static_cast<std::size_t>(ic) * s.hi + iy) * s.wi + ix] += acc;
      }
    }
  }
}

void conv2d_bwd_weight(const Conv2dShape& s, const double* gy, const double* x,
                       double* gw, double* gb) {
  const int ho = s.ho(), wo = s.wo();
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.co; ++oc) {
    for (int ic = 0; ic < s.ci; ++ic) {
      const double* gp = gy + static_cast<std::size_t>(oc) * ho * wo;
      const double* xp = x + static_cast<std::size_t>(ic) * s.hi * s.wi;
      for (int ky = 0; ky < s.kh; ++ky) {
        for (int kx = 0; kx < s.kw; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.hi) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * s.stride - s.pad + kx;
              if (ix < 0 || ix >= s.wi) continue;
              acc += gp[static_cast<std::size_t>(oy) * wo + ox] *
                     xp[static_cast<std::size_t>(iy) * s.wi + ix];
            }
          }
          gw[((static_cast<std::size_t>(oc) * s.ci + ic) * s.kh + ky) * s.kw +
             kx] += acc;
        }
      }
    }
  }
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.co; ++oc) {
      double acc = 0.0;
      const double* gp = gy + static_cast<std::size_t>(oc) * ho * wo;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          acc += gp[static_cast<std::size_t>(oy) * wo + ox];
      gb[oc] += acc;
    }
  }
}

namespace {

inline double sample_clamped(const double* plane, int h, int w, int y, int x) {
  y = std::clamp(y, 0, h - 1);
  x = std::clamp(x, 0, w - 1);
  return plane[static_cast<std::size_t>(y) * w + x];
}

inline double sample_zero(const double* plane, int h, int w, int y, int x) {
  if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
  return plane[static_cast<std::size_t>(y) * w + x];
}

}  // namespace

void warp_bilinear(int c, int h, int w, const double* img, const double* u,
                   const double* v, Border border, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const double* plane = img + static_cast<std::size_t>(ch) * h * w;
      double* oplane = out + static_cast<std::size_t>(ch) * h * w;
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double sx = x + u[i];
        const double sy = y + v[i];
        const double fx = std::floor(sx);
        const double fy = std::floor(sy);
        const int x0 = static_cast<int>(fx);
        const int y0 = static_cast<int>(fy);
        const double ax = sx - fx;
        const double ay = sy - fy;
        double p00, p01, p10, p11;
        if (border == Border::replicate) {
          p00 = sample_clamped(plane, h, w, y0, x0);
          p01 = sample_clamped(plane, h, w, y0, x0 + 1);
          p10 = sample_clamped(plane, h, w, y0 + 1, x0);
          p11 = sample_clamped(plane, h, w, y0 + 1, x0 + 1);
        } else {
          p00 = sample_zero(plane, h, w, y0, x0);
          p01 = sample_zero(plane, h, w, y0, x0 + 1);
          p10 = sample_zero(plane, h, w, y0 + 1, x0);
          p11 = sample_zero(plane, h, w, y0 + 1, x0 + 1);
        }
        oplane[i] = (1.0 - ay) * ((1.0 - ax) * p00 + ax * p01) +
                    ay * ((1.0 - ax) * p10 + ax * p11);
      }
    }
  }
}

void bicubic_downsample(int c, int h, int w, int scale, const double* img,
                        double* out) {
  const int oh = h / scale, ow = w / scale;
  const double s = static_cast<double>(scale);
  const int radius = 2 * scale;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      const double* plane = img + static_cast<std::size_t>(ch) * h * w;
      double* oplane = out + static_cast<std::size_t>(ch) * oh * ow;
      const double cy = (oy + 0.5) * s - 0.5;
      const int y_lo = static_cast<int>(std::floor(cy)) - radius + 1;
      for (int ox = 0; ox < ow; ++ox) {
        const double cx = (ox + 0.5) * s - 0.5;
        const int x_lo = static_cast<int>(std::floor(cx)) - radius + 1;
        double acc = 0.0, wsum = 0.0;
        for (int jy = y_lo; jy <= y_lo + 2 * radius - 1; ++jy) {
          const double wy = cubic_keys((cy - jy) / s);
          if (wy == 0.0) continue;
          for (int jx = x_lo; jx <= x_lo + 2 * radius - 1; ++jx) {
            const double wx = cubic_keys((cx - jx) / s);
            if (wx == 0.0) continue;
            const double wgt = wy * wx;
            acc += wgt * sample_clamped(plane, h, w, jy, jx);
            wsum += wgt;
          }
        }
        oplane[static_cast<std::size_t>(oy) * ow + ox] = acc / wsum;
      }
    }
  }
}

void block_sad_flow(int c, int h, int w, const double* prev,
                    const double* curr, int block, int radius, double* u,
                    double* v) {
  const int by_n = (h + block - 1) / block;
  const int bx_n = (w + block - 1) / block;
#pragma omp parallel for collapse(2) schedule(static)
  for (int by = 0; by < by_n; ++by) {
    for (int bx = 0; bx < bx_n; ++bx) {
      const int y0 = by * block, x0 = bx * block;
      const int y1 = std::min(y0 + block, h), x1 = std::min(x0 + block, w);
      double best = 0.0;
      int best_dx = 0, best_dy = 0;
      bool first = true;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          double sad = 0.0;
          for (int ch = 0; ch < c; ++ch) {
            const double* pp = prev + static_cast<std::size_t>(ch) * h * w;
            const double* cp = curr + static_cast<std::size_t>(ch) * h * w;
            for (int y = y0; y < y1; ++y) {
              for (int x = x0; x < x1; ++x) {
                const double d = cp[static_cast<std::size_t>(y) * w + x] -
                                 sample_clamped(pp, h, w, y + dy, x + dx);
                sad += d < 0 ? -d : d;
              }
            }
          }
          const int norm = dx * dx + dy * dy;
          const int best_norm = best_dx * best_dx + best_dy * best_dy;
          const bool better =
              first || sad < best ||
              (sad == best &&
               (norm < best_norm ||
                (norm == best_norm &&
                 (dy < best_dy || (dy == best_dy && dx < best_dx)))));
          if (better) {
            best = sad;
            best_dx = dx;
            best_dy = dy;
            first = false;
          }
        }
      }
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          u[static_cast<std::size_t>(y) * w + x] = best_dx;
          v[static_cast<std::size_t>(y) * w + x] = best_dy;
        }
      }
    }
  }
}

}  // namespace streamvsr::kernels::par
