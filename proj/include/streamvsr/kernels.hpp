// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace streamvsr::kernels {

// The hot pixel loops exist twice: a plain serial reference in
// kernels::serial and an OpenMP version in kernels::par. Both iterate each
// output element with the same inner accumulation order, so results are
// bit-identical and parity tests can compare them exactly. The dispatch
// functions below route through the selected backend; bench_kernels times
// the two side by side.
enum class Backend { serial, parallel };

Backend backend();
void set_backend(Backend b);

struct Conv2dShape {
  int ci = 0, hi = 0, wi = 0;  // input channels / height / width
  int co = 0, kh = 3, kw = 3;  // output channels, kernel
  int stride = 1, pad = 1;
  int ho() const { return (hi + 2 * pad - kh) / stride + 1; }
  int wo() const { return (wi + 2 * pad - kw) / stride + 1; }
};

enum class Border { replicate, zero };

namespace serial {
void conv2d_fwd(const Conv2dShape& s, const double* x, const double* w,
                const double* b, double* y);
void conv2d_bwd_input(const Conv2dShape& s, const double* gy, const double* w,
                      double* gx);
void conv2d_bwd_weight(const Conv2dShape& s, const double* gy, const double* x,
                       double* gw, double* gb);
void warp_bilinear(int c, int h, int w, const double* img, const double* u,
                   const double* v, Border border, double* out);
void bicubic_downsample(int c, int h, int w, int scale, const double* img,
                        double* out);
void block_sad_flow(int c, int h, int w, const double* prev,
                    const double* curr, int block, int radius, double* u,
                    double* v);
}  // namespace serial

namespace par {
void conv2d_fwd(const Conv2dShape& s, const double* x, const double* w,
                const double* b, double* y);
void conv2d_bwd_input(const Conv2dShape& s, const double* gy, const double* w,
                      double* gx);
void conv2d_bwd_weight(const Conv2dShape& s, const double* gy, const double* x,
                       double* gw, double* gb);
void warp_bilinear(int c, int h, int w, const double* img, const double* u,
                   const double* v, Border border, double* out);
void bicubic_downsample(int c, int h, int w, int scale, const double* img,
                        double* out);
void block_sad_flow(int c, int h, int w, const double* prev,
                    const double* curr, int block, int radius, double* u,
                    double* v);
}  // namespace par

// Backend-dispatched entry points.
void conv2d_fwd(const Conv2dShape& s, const double* x, const double* w,
                const double* b, double* y);
void conv2d_bwd_input(const Conv2dShape& s, const double* gy, const double* w,
                      double* gx);
void conv2d_bwd_weight(const Conv2dShape& s, const double* gy, const double* x,
                       double* gw, double* gb);
void warp_bilinear(int c, int h, int w, const double* img, const double* u,
                   const double* v, Border border, double* out);
void bicubic_downsample(int c, int h, int w, int scale, const double* img,
                        double* out);
void block_sad_flow(int c, int h, int w, const double* prev,
                    const double* curr, int block, int radius, double* u,
                    double* v);

// Cheap shape-changing helpers; single implementation.
void resize_bilinear(int c, int hi, int wi, int ho, int wo, const double* in,
                     double* out);
void avgpool_fwd(int c, int h, int w, int k, const double* x, double* y);
void avgpool_bwd(int c, int h, int w, int k, const double* gy, double* gx);
void upsample2_fwd(int c, int h, int w, const double* x, double* y);
void upsample2_bwd(int c, int h, int w, const double* gy, double* gx);

// Keys bicubic kernel, a = -0.5. Shared by the degrader and its tests.
double cubic_keys(double x);

}  // namespace streamvsr::kernels
