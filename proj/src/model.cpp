// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/model.hpp"

#include <algorithm>

#include "streamvsr/checkpoint.hpp"

namespace streamvsr::model {

ModelBundle ModelBundle::init(const ModelConfig& cfg, std::uint64_t seed) {
  ModelBundle b;
  b.cfg = cfg;
  Rng rng(seed);
  b.codec = codec::Codec(
      codec::CodecConfig{cfg.latent_channels, cfg.codec_w1, cfg.codec_w2}, rng);
  denoise::UNetConfig ucfg;
  ucfg.latent_channels = cfg.latent_channels;
  ucfg.base = cfg.unet_base;
  ucfg.temb_dim = cfg.temb_dim;
  ucfg.concat_warped = cfg.artg_concat_cond;
  b.unet = denoise::UNet(ucfg, rng);
  b.artg = denoise::Artg(cfg.artg_width, cfg.latent_channels, rng);
  b.disc = nn::PatchDiscriminator(cfg.disc_width, rng);
  return b;
}

ModelBundle ModelBundle::clone() const {
  ModelBundle b = init(cfg, /*seed=*/0);
  auto* self = const_cast<ModelBundle*>(this);
  auto src = self->params();
  auto dst = b.params();
  for (auto& [name, var] : dst) {
    const auto& s = src.at(name);
    var.val().v = s.val().v;
    var.set_requires_grad(s.requires_grad());
  }
  b.codec.set_latent_scale(codec.latent_scale());
  b.stages_completed = stages_completed;
  return b;
}

nn::ParamMap ModelBundle::params() {
  nn::ParamMap m;
  codec.collect_params(m, "codec");
  unet.collect_params(m, "unet");
  artg.collect_params(m, "artg");
  disc.collect(m, "disc");
  return m;
}

void ModelBundle::set_group_trainable(const std::string& prefix,
                                      bool trainable) {
  auto m = params();
  nn::set_group_requires_grad(m, prefix, trainable);
  // codec.tenc stays frozen no matter what the caller asked for.
  nn::set_group_requires_grad(m, "codec.tenc", false);
}

void ModelBundle::freeze_all_except(const std::vector<std::string>& prefixes) {
  auto m = params();
  nn::set_group_requires_grad(m, "", false);
  for (const auto& p : prefixes) nn::set_group_requires_grad(m, p, true);
  nn::set_group_requires_grad(m, "codec.tenc", false);
}

bool ModelBundle::has_stage(const std::string& stage) const {
  return std::find(stages_completed.begin(), stages_completed.end(), stage) !=
         stages_completed.end();
}

void ModelBundle::mark_stage(const std::string& stage) {
  if (!has_stage(stage)) stages_completed.push_back(stage);
}

void ModelBundle::save(const std::filesystem::path& file) const {
  auto* self = const_cast<ModelBundle*>(this);
  nlohmann::json manifest;
  manifest["model"] = {
      {"latent_channels", cfg.latent_channels},
      {"codec_w1", cfg.codec_w1},
      {"codec_w2", cfg.codec_w2},
      {"unet_base", cfg.unet_base},
      {"temb_dim", cfg.temb_dim},
      {"artg_width", cfg.artg_width},
      {"disc_width", cfg.disc_width},
      {"artg_concat_cond", cfg.artg_concat_cond},
  };
  manifest["latent_scale"] = codec.latent_scale();
  manifest["stages_completed"] = stages_completed;
  ckpt::save(file, self->params(), manifest);
}

ModelBundle ModelBundle::load(const std::filesystem::path& file) {
  auto contents = ckpt::load(file);
  const auto& mj = contents.manifest.at("model");
  ModelConfig cfg;
  cfg.latent_channels = mj.at("latent_channels").get<int>();
  cfg.codec_w1 = mj.at("codec_w1").get<int>();
  cfg.codec_w2 = mj.at("codec_w2").get<int>();
  cfg.unet_base = mj.at("unet_base").get<int>();
  cfg.temb_dim = mj.at("temb_dim").get<int>();
  cfg.artg_width = mj.at("artg_width").get<int>();
  cfg.disc_width = mj.at("disc_width").get<int>();
  cfg.artg_concat_cond = mj.at("artg_concat_cond").get<bool>();
  ModelBundle b = init(cfg, /*seed=*/0);
  auto m = b.params();
  ckpt::restore_params(m, contents);
  b.codec.set_latent_scale(contents.manifest.value("latent_scale", 1.0));
  b.stages_completed =
      contents.manifest.at("stages_completed").get<std::vector<std::string>>();
  return b;
}

}  // namespace streamvsr::model
