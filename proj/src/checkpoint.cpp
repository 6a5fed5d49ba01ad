// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "streamvsr/errors.hpp"

namespace streamvsr::ckpt {

void save(const std::filesystem::path& file, const nn::ParamMap& params,
          const nlohmann::json& extra_manifest) {
  nlohmann::json manifest = extra_manifest;
  manifest["checkpoint_version"] = kVersion;
  auto& table = manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, var] : params) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = var.val().dims;
    entry["offset"] = offset;
    entry["count"] = var.val().numel();
    entry["trainable"] = var.requires_grad();
    table.push_back(entry);
    offset += static_cast<std::uint64_t>(var.val().numel());
  }

  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + file.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const std::string mstr = manifest.dump();
  const std::uint64_t mlen = mstr.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  for (const auto& [name, var] : params) {
    const auto& v = var.val().v;
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint write failed: " + file.string());
}

Contents load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + file.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("bad checkpoint magic", 0);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  if (!in || ver != kVersion)
    throw ParseError("unsupported checkpoint version", sizeof(kMagic));
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  if (!in) throw ParseError("truncated manifest length", sizeof(kMagic) + 4);
  std::string mstr(mlen, '\0');
  in.read(mstr.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw ParseError("truncated manifest", sizeof(kMagic) + 12);

  Contents c;
  try {
    c.manifest = nlohmann::json::parse(mstr);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest JSON: ") + e.what(),
                     sizeof(kMagic) + 12 + e.byte);
  }
  for (const auto& entry : c.manifest.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    if (!in)
      throw ParseError("truncated tensor data for " + name,
                       static_cast<std::size_t>(in.tellg()));
    c.tensors.emplace(name, std::move(t));
  }
  return c;
}

void restore_params(nn::ParamMap& params, const Contents& c) {
  for (auto& [name, var] : params) {
    auto it = c.tensors.find(name);
    if (it == c.tensors.end())
      throw DependencyError("checkpoint missing tensor: " + name);
    if (it->second.dims != var.val().dims)
      throw DimensionError("checkpoint tensor shape mismatch: " + name);
    var.val().v = it->second.v;
  }
}

}  // namespace streamvsr::ckpt
