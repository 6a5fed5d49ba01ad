// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/codec.hpp"

#include "streamvsr/errors.hpp"

namespace streamvsr::codec {

Tpm::Tpm(int channels, Rng& rng)
    : align(channels, channels, 3, 1, 1, rng),
      gate(2 * channels, 1, 3, 1, 1, rng) {}

ag::Var Tpm::fuse(const ag::Var& spatial, const ag::Var& temporal,
                  GateMode mode) const {
  if (mode == GateMode::zero) return spatial;
  auto aligned = align(temporal);
  if (mode == GateMode::one) return aligned;
  auto g = ag::sigmoid(gate(ag::concat_c(spatial, aligned)));
  // convex per-pixel blend: g*aligned + (1-g)*spatial
  return ag::add(ag::mul_gate(g, aligned),
                 ag::mul_gate(ag::affine(g, -1.0, 1.0), spatial));
}

Codec::Codec(const CodecConfig& cfg, Rng& rng)
    : cfg_(cfg),
      enc1_(3, cfg.w1, 3, 2, 1, rng),
      enc2_(cfg.w1, cfg.w2, 3, 2, 1, rng),
      enc3_(cfg.w2, cfg.latent_channels, 3, 1, 1, rng),
      dec_in_(cfg.latent_channels, cfg.w2, 3, 1, 1, rng),
      dec_mid_(cfg.w2, cfg.w2, 3, 1, 1, rng),
      dec_out_(cfg.w2, cfg.w1, 3, 1, 1, rng),
      dec_rgb_(cfg.w1, 3, 3, 1, 1, rng),
      tpm1_(cfg.w2, rng),
      tpm2_(cfg.w1, rng),
      tenc1_(3, cfg.w1, 3, 1, 1, rng),
      tenc2_(cfg.w1, cfg.w2, 3, 2, 1, rng) {
  sync_temporal_encoder();
  tenc1_.w.set_requires_grad(false);
  tenc1_.b.set_requires_grad(false);
  tenc2_.w.set_requires_grad(false);
  tenc2_.b.set_requires_grad(false);
}

void Codec::set_latent_scale(double s) {
  if (!(s > 0.0) || !std::isfinite(s))
    throw ArgumentError("set_latent_scale: scale must be positive and finite");
  latent_scale_ = s;
}

void Codec::sync_temporal_encoder() {
  tenc1_.w.val().v = enc1_.w.val().v;
  tenc1_.b.val().v = enc1_.b.val().v;
  tenc2_.w.val().v = enc2_.w.val().v;
  tenc2_.b.val().v = enc2_.b.val().v;
}

ag::Var Codec::encode(const ag::Var& frame) const {
  const Tensor& f = frame.val();
  if (f.dims.size() != 3 || f.c() != 3)
    throw DimensionError("encode: expected {3,H,W} frame");
  if (f.h() % 4 != 0 || f.w() % 4 != 0)
    throw DimensionError("encode: H and W must be divisible by 4");
  auto h1 = ag::silu(enc1_(frame));
  auto h2 = ag::silu(enc2_(h1));
  auto z = enc3_(h2);
  return latent_scale_ == 1.0 ? z : ag::scale(z, 1.0 / latent_scale_);
}

ag::Var Codec::decode(const ag::Var& z) const {
  TemporalFeature none;
  return decode_temporal(z, none, GateMode::zero);
}

ag::Var Codec::decode_temporal(const ag::Var& z, const TemporalFeature& temporal,
                               GateMode mode) const {
  const Tensor& zt = z.val();
  if (zt.dims.size() != 3 || zt.c() != cfg_.latent_channels)
    throw DimensionError("decode: expected {" +
                         std::to_string(cfg_.latent_channels) + ",h,w} latent");
  const bool fused = mode != GateMode::zero;
  if (fused && static_cast<int>(temporal.scales.size()) != 2)
    throw DimensionError("decode_temporal: expected 2 temporal scales");

  auto z_raw = latent_scale_ == 1.0 ? z : ag::scale(z, latent_scale_);
  auto d0 = ag::silu(dec_in_(z_raw));
  auto u1 = ag::silu(dec_mid_(ag::upsample2(d0)));   // half target res, w2
  if (fused) {
    const Tensor& t0 = temporal.scales[0].val();
    if (t0.c() != cfg_.w2 || t0.h() != u1.val().h() || t0.w() != u1.val().w())
      throw DimensionError("decode_temporal: scale-0 feature mismatch");
    u1 = tpm1_.fuse(u1, temporal.scales[0], mode);
  }
  auto u2 = ag::silu(dec_out_(ag::upsample2(u1)));   // full target res, w1
  if (fused) {
    const Tensor& t1 = temporal.scales[1].val();
    if (t1.c() != cfg_.w1 || t1.h() != u2.val().h() || t1.w() != u2.val().w())
      throw DimensionError("decode_temporal: scale-1 feature mismatch");
    u2 = tpm2_.fuse(u2, temporal.scales[1], mode);
  }
  return ag::sigmoid(dec_rgb_(u2));
}

TemporalFeature Codec::extract_temporal(const Tensor& warped_prev) const {
  if (warped_prev.dims.size() != 3 || warped_prev.c() != 3)
    throw DimensionError("extract_temporal: expected {3,H,W} frame");
  auto x = ag::Var::constant(warped_prev);
  auto full = ag::silu(tenc1_(x));   // w1 @ full res
  auto half = ag::silu(tenc2_(full));  // w2 @ half res
  TemporalFeature tf;
  tf.scales.push_back(half.detach());
  tf.scales.push_back(full.detach());
  return tf;
}

Tensor Codec::encode(const Tensor& frame) const {
  return encode(ag::Var::constant(frame)).val();
}

Tensor Codec::decode(const Tensor& z) const {
  return decode(ag::Var::constant(z)).val();
}

Tensor Codec::decode_temporal(const Tensor& z, const TemporalFeature& temporal,
                              GateMode mode) const {
  return decode_temporal(ag::Var::constant(z), temporal, mode).val();
}

void Codec::collect_params(nn::ParamMap& m, const std::string& prefix) {
  enc1_.collect(m, prefix + ".enc.c1");
  enc2_.collect(m, prefix + ".enc.c2");
  enc3_.collect(m, prefix + ".enc.c3");
  dec_in_.collect(m, prefix + ".dec.in");
  dec_mid_.collect(m, prefix + ".dec.mid");
  dec_out_.collect(m, prefix + ".dec.out");
  dec_rgb_.collect(m, prefix + ".dec.rgb");
  tpm1_.collect(m, prefix + ".tpm.s0");
  tpm2_.collect(m, prefix + ".tpm.s1");
  tenc1_.collect(m, prefix + ".tenc.c1");
  tenc2_.collect(m, prefix + ".tenc.c2");
}

}  // namespace streamvsr::codec
