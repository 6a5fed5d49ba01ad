// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "streamvsr/nn.hpp"

namespace streamvsr::ckpt {

// Single-file checkpoint: magic + version, a JSON manifest (shapes, stage
// provenance, frozen flags, model config), then raw float64 tensor data in
// manifest order, little endian.
inline constexpr char kMagic[8] = {'S', 'V', 'S', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;

struct Contents {
  nlohmann::json manifest;  // everything except tensor data
  std::map<std::string, Tensor> tensors;
};

void save(const std::filesystem::path& file, const nn::ParamMap& params,
          const nlohmann::json& extra_manifest);

Contents load(const std::filesystem::path& file);

// Copies tensors into an existing parameter map; shapes must match.
void restore_params(nn::ParamMap& params, const Contents& c);

}  // namespace streamvsr::ckpt
