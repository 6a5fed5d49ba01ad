// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "streamvsr/model.hpp"
#include "streamvsr/training.hpp"

namespace streamvsr::config {

struct ScheduleSpec {
  int t_total = 64;
  double beta_min = 1e-4;
  double beta_max = 2e-2;
  std::string spacing = "linear";
  // LQ conditioning stays in [0,1]; recorded here so runs are self-describing.
  std::string cond_range = "unit";
};

struct Seeds {
  std::uint64_t init = 1;
  std::uint64_t data = 2;
  std::uint64_t train = 3;
  std::uint64_t stream_base = 1000;
};

// Versioned run configuration. Parsing is strict: any unknown key anywhere
// in the document is a ConfigError. Every run writes its resolved copy next
// to its outputs.
struct RunConfig {
  int version = 1;
  std::string notes;
  train::DataSpec data;
  ScheduleSpec schedule;
  int plan_steps = 4;
  model::ModelConfig model_cfg;
  std::map<std::string, train::StageConfig> stages;  // keyed by stage name
  Seeds seeds;
  std::string cache_dir;  // paths.cache, overridable by STREAMVSR_CACHE

  diffusion::NoiseSchedule make_schedule() const;
  diffusion::TimestepPlan make_plan() const;
  const train::StageConfig& stage(const std::string& name) const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json to_json(const RunConfig& cfg);
void write_resolved_config(const std::filesystem::path& dir,
                           const RunConfig& cfg);

// Validates a sequence-directory meta.json against its schema (strict keys);
// throws ConfigError on unknown keys or missing fields.
void validate_meta_json(const nlohmann::json& meta);

}  // namespace streamvsr::config
