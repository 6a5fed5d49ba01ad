// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "streamvsr/codec.hpp"
#include "streamvsr/denoiser.hpp"

namespace streamvsr::model {

struct ModelConfig {
  int latent_channels = 4;
  int codec_w1 = 16, codec_w2 = 32;
  int unet_base = 32;
  int temb_dim = 64;
  int artg_width = 16;
  int disc_width = 16;
  bool artg_concat_cond = false;  // Eq-style input concat instead of latent injection
};

// All parameter groups of the pipeline plus stage provenance. Group name
// prefixes: codec.enc, codec.dec, codec.tpm, codec.tenc, unet, artg, disc.
struct ModelBundle {
  ModelConfig cfg;
  codec::Codec codec;
  denoise::UNet unet;
  denoise::Artg artg;
  nn::PatchDiscriminator disc;
  std::vector<std::string> stages_completed;

  static ModelBundle init(const ModelConfig& cfg, std::uint64_t seed);

  // Deep copy: fresh parameter storage with identical values and flags.
  ModelBundle clone() const;

  nn::ParamMap params();

  void set_group_trainable(const std::string& prefix, bool trainable);
  // Marks every group untrainable except the listed prefixes.
  void freeze_all_except(const std::vector<std::string>& prefixes);

  bool has_stage(const std::string& stage) const;
  void mark_stage(const std::string& stage);

  void save(const std::filesystem::path& file) const;
  static ModelBundle load(const std::filesystem::path& file);
};

}  // namespace streamvsr::model
