// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "streamvsr/errors.hpp"
#include "streamvsr/rng.hpp"

namespace streamvsr {

// Dense row-major tensor of doubles. Images are {3,H,W} in [0,1], latents
// {C,h,w}, vectors {N}. Double precision keeps the DDIM inversion and the
// finite-difference gradient checks well inside their tolerances.
struct Tensor {
  std::vector<int> dims;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    v.assign(static_cast<std::size_t>(numel_of(dims)), 0.0);
  }

  static Tensor zeros(std::vector<int> d) { return Tensor(std::move(d)); }

  static Tensor full(std::vector<int> d, double value) {
    Tensor t(std::move(d));
    for (auto& x : t.v) x = value;
    return t;
  }

  static Tensor from(std::vector<int> d, std::vector<double> data) {
    Tensor t;
    t.dims = std::move(d);
    if (static_cast<std::int64_t>(data.size()) != numel_of(t.dims))
      throw DimensionError("tensor data size does not match shape");
    t.v = std::move(data);
    return t;
  }

  static Tensor randn(std::vector<int> d, Rng& rng) {
    Tensor t(std::move(d));
    for (auto& x : t.v) x = rng.normal();
    return t;
  }

  static std::int64_t numel_of(const std::vector<int>& d) {
    std::int64_t n = 1;
    for (int x : d) {
      if (x < 0) throw DimensionError("negative dimension");
      n *= x;
    }
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  bool defined() const { return !dims.empty(); }

  // {C,H,W} accessors; rank-3 only.
  int c() const { return dims.at(0); }
  int h() const { return dims.at(1); }
  int w() const { return dims.at(2); }

  double& at(int c_, int y, int x) {
    return v[(static_cast<std::size_t>(c_) * dims[1] + y) * dims[2] + x];
  }
  double at(int c_, int y, int x) const {
    return v[(static_cast<std::size_t>(c_) * dims[1] + y) * dims[2] + x];
  }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims[i]);
    }
    return s + "]";
  }
};

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor add: shape mismatch");
  Tensor r = a;
  for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
  return r;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("tensor sub: shape mismatch");
  Tensor r = a;
  for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= b.v[i];
  return r;
}

inline Tensor operator*(const Tensor& a, double s) {
  Tensor r = a;
  for (auto& x : r.v) x *= s;
  return r;
}

inline Tensor& axpy(Tensor& y, double a, const Tensor& x) {
  if (!y.same_shape(x)) throw DimensionError("axpy: shape mismatch");
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
  return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    double d = a.v[i] - b.v[i];
    if (d < 0) d = -d;
    if (d > m) m = d;
  }
  return m;
}

inline double mean_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("mean_abs_diff: shape mismatch");
  if (a.v.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    double d = a.v[i] - b.v[i];
    s += d < 0 ? -d : d;
  }
  return s / static_cast<double>(a.v.size());
}

inline double mean_sq_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("mean_sq_diff: shape mismatch");
  if (a.v.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    double d = a.v[i] - b.v[i];
    s += d * d;
  }
  return s / static_cast<double>(a.v.size());
}

inline Tensor clamp01(Tensor t) {
  for (auto& x : t.v) {
    if (x < 0.0) x = 0.0;
    if (x > 1.0) x = 1.0;
  }
  return t;
}

inline bool all_finite(const Tensor& t) {
  for (double x : t.v)
    if (!std::isfinite(x)) return false;
  return true;
}

// FNV-1a over the raw bytes; used by tests that assert bit-identity.
inline std::uint64_t content_hash(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (int d : t.dims)
    mix(reinterpret_cast<const unsigned char*>(&d), sizeof(d));
  if (!t.v.empty())
    mix(reinterpret_cast<const unsigned char*>(t.v.data()),
        t.v.size() * sizeof(double));
  return h;
}

}  // namespace streamvsr
