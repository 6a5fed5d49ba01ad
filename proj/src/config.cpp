// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/config.hpp"

#include <fstream>
#include <set>

#include "streamvsr/errors.hpp"

namespace streamvsr::config {

namespace {

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void maybe(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

train::StageConfig parse_stage(const nlohmann::json& j,
                               train::StageConfig base,
                               const std::string& where) {
  check_keys(j,
             {"iterations", "batch_size", "lr", "adam_beta1", "adam_beta2",
              "weight_decay", "lambda_lpips", "lambda_gan", "lambda_flow",
              "adv_warmup", "seed", "notes"},
             where);
  maybe(j, "iterations", base.iterations);
  maybe(j, "batch_size", base.batch_size);
  maybe(j, "lr", base.lr);
  maybe(j, "adam_beta1", base.adam_beta1);
  maybe(j, "adam_beta2", base.adam_beta2);
  maybe(j, "weight_decay", base.weight_decay);
  maybe(j, "lambda_lpips", base.lambda_lpips);
  maybe(j, "lambda_gan", base.lambda_gan);
  maybe(j, "lambda_flow", base.lambda_flow);
  maybe(j, "adv_warmup", base.adv_warmup);
  maybe(j, "seed", base.seed);
  return base;
}

nlohmann::json stage_to_json(const train::StageConfig& c) {
  return {{"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"weight_decay", c.weight_decay},
          {"lambda_lpips", c.lambda_lpips},
          {"lambda_gan", c.lambda_gan},
          {"lambda_flow", c.lambda_flow},
          {"adv_warmup", c.adv_warmup},
          {"seed", c.seed}};
}

std::map<std::string, train::StageConfig> default_stages() {
  return {{"codec", train::default_codec_config()},
          {"teacher", train::default_teacher_config()},
          {"distill", train::default_distill_config()},
          {"distill_random", train::default_distill_random_config()},
          {"tpm", train::default_tpm_config()},
          {"artg", train::default_artg_config()}};
}

}  // namespace

diffusion::NoiseSchedule RunConfig::make_schedule() const {
  return diffusion::make_schedule(schedule.t_total, schedule.beta_min,
                                  schedule.beta_max);
}

diffusion::TimestepPlan RunConfig::make_plan() const {
  return diffusion::rollout_timesteps(schedule.t_total, plan_steps);
}

const train::StageConfig& RunConfig::stage(const std::string& name) const {
  auto it = stages.find(name);
  if (it == stages.end()) throw ConfigError("no stage config named " + name);
  return it->second;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  check_keys(j, {"version", "notes", "data", "schedule", "plan", "model",
                 "stages", "seeds", "paths"},
             "config root");
  RunConfig cfg;
  cfg.stages = default_stages();
  if (!j.contains("version")) throw ConfigError("config missing 'version'");
  cfg.version = j.at("version").get<int>();
  if (cfg.version != 1)
    throw ConfigError("unsupported config version " +
                      std::to_string(cfg.version));
  maybe(j, "notes", cfg.notes);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d,
               {"train_sequences", "val_sequences", "frames", "height",
                "width", "max_shift", "subpixel", "fps", "notes"},
               "data");
    maybe(d, "train_sequences", cfg.data.train_sequences);
    maybe(d, "val_sequences", cfg.data.val_sequences);
    maybe(d, "frames", cfg.data.frames);
    maybe(d, "height", cfg.data.height);
    maybe(d, "width", cfg.data.width);
    maybe(d, "max_shift", cfg.data.max_shift);
    maybe(d, "subpixel", cfg.data.subpixel);
    maybe(d, "fps", cfg.data.fps);
  }

  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    check_keys(s, {"t_total", "beta_min", "beta_max", "spacing", "cond_range",
                   "notes"},
               "schedule");
    maybe(s, "t_total", cfg.schedule.t_total);
    maybe(s, "beta_min", cfg.schedule.beta_min);
    maybe(s, "beta_max", cfg.schedule.beta_max);
    maybe(s, "spacing", cfg.schedule.spacing);
    maybe(s, "cond_range", cfg.schedule.cond_range);
    if (cfg.schedule.spacing != "linear")
      throw ConfigError("schedule.spacing: only 'linear' is supported");
    if (cfg.schedule.cond_range != "unit")
      throw ConfigError("schedule.cond_range: only 'unit' is supported");
  }

  if (j.contains("plan")) {
    const auto& p = j.at("plan");
    check_keys(p, {"steps", "notes"}, "plan");
    maybe(p, "steps", cfg.plan_steps);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m,
               {"latent_channels", "codec_widths", "unet_base", "temb_dim",
                "artg_width", "disc_width", "artg_concat_cond", "notes"},
               "model");
    maybe(m, "latent_channels", cfg.model_cfg.latent_channels);
    if (m.contains("codec_widths")) {
      const auto w = m.at("codec_widths").get<std::vector<int>>();
      if (w.size() != 2) throw ConfigError("model.codec_widths: need [w1, w2]");
      cfg.model_cfg.codec_w1 = w[0];
      cfg.model_cfg.codec_w2 = w[1];
    }
    maybe(m, "unet_base", cfg.model_cfg.unet_base);
    maybe(m, "temb_dim", cfg.model_cfg.temb_dim);
    maybe(m, "artg_width", cfg.model_cfg.artg_width);
    maybe(m, "disc_width", cfg.model_cfg.disc_width);
    maybe(m, "artg_concat_cond", cfg.model_cfg.artg_concat_cond);
  }

  if (j.contains("stages")) {
    const auto& st = j.at("stages");
    check_keys(st,
               {"codec", "teacher", "distill", "distill_random", "tpm", "artg",
                "joint"},
               "stages");
    for (const auto& [name, body] : st.items()) {
      train::StageConfig base;
      auto it = cfg.stages.find(name);
      if (it != cfg.stages.end()) {
        base = it->second;
      } else {
        base = train::default_distill_config();
        base.stage = name;
      }
      cfg.stages[name] = parse_stage(body, base, "stages." + name);
    }
  }

  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    check_keys(s, {"init", "data", "train", "stream_base"}, "seeds");
    maybe(s, "init", cfg.seeds.init);
    maybe(s, "data", cfg.seeds.data);
    maybe(s, "train", cfg.seeds.train);
    maybe(s, "stream_base", cfg.seeds.stream_base);
  }

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, {"cache"}, "paths");
    if (p.contains("cache") && !p.at("cache").is_null())
      cfg.cache_dir = p.at("cache").get<std::string>();
  }
  if (const char* env = std::getenv("STREAMVSR_CACHE")) cfg.cache_dir = env;

  // Propagate the shared training seed into stages that kept their default.
  for (auto& [name, st] : cfg.stages)
    if (st.seed == train::StageConfig{}.seed) st.seed = cfg.seeds.train;

  if (cfg.schedule.t_total % cfg.plan_steps != 0)
    throw ConfigError("plan.steps must divide schedule.t_total");
  if (cfg.data.height % 8 != 0 || cfg.data.width % 8 != 0)
    throw ConfigError("data dims must be multiples of 8");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config JSON parse error: " + std::string(e.what()));
  }
  return parse_run_config(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["version"] = cfg.version;
  if (!cfg.notes.empty()) j["notes"] = cfg.notes;
  j["data"] = {{"train_sequences", cfg.data.train_sequences},
               {"val_sequences", cfg.data.val_sequences},
               {"frames", cfg.data.frames},
               {"height", cfg.data.height},
               {"width", cfg.data.width},
               {"max_shift", cfg.data.max_shift},
               {"subpixel", cfg.data.subpixel},
               {"fps", cfg.data.fps}};
  j["schedule"] = {{"t_total", cfg.schedule.t_total},
                   {"beta_min", cfg.schedule.beta_min},
                   {"beta_max", cfg.schedule.beta_max},
                   {"spacing", cfg.schedule.spacing},
                   {"cond_range", cfg.schedule.cond_range}};
  j["plan"] = {{"steps", cfg.plan_steps}};
  j["model"] = {{"latent_channels", cfg.model_cfg.latent_channels},
                {"codec_widths",
                 {cfg.model_cfg.codec_w1, cfg.model_cfg.codec_w2}},
                {"unet_base", cfg.model_cfg.unet_base},
                {"temb_dim", cfg.model_cfg.temb_dim},
                {"artg_width", cfg.model_cfg.artg_width},
                {"disc_width", cfg.model_cfg.disc_width},
                {"artg_concat_cond", cfg.model_cfg.artg_concat_cond}};
  j["stages"] = nlohmann::json::object();
  for (const auto& [name, st] : cfg.stages) j["stages"][name] = stage_to_json(st);
  j["seeds"] = {{"init", cfg.seeds.init},
                {"data", cfg.seeds.data},
                {"train", cfg.seeds.train},
                {"stream_base", cfg.seeds.stream_base}};
  j["paths"] = {{"cache", cfg.cache_dir.empty()
                              ? nlohmann::json(nullptr)
                              : nlohmann::json(cfg.cache_dir)}};
  return j;
}

void write_resolved_config(const std::filesystem::path& dir,
                           const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "resolved_config.json", std::ios::trunc);
  if (!out) throw IoError("cannot write resolved config in " + dir.string());
  out << to_json(cfg).dump(2) << "\n";
}

void validate_meta_json(const nlohmann::json& meta) {
  check_keys(meta,
             {"schema_version", "fps", "frames", "height", "width",
              "motion_spec"},
             "meta.json");
  for (const char* key :
       {"schema_version", "fps", "frames", "height", "width", "motion_spec"})
    if (!meta.contains(key))
      throw ConfigError(std::string("meta.json missing '") + key + "'");
  if (meta.at("schema_version").get<int>() != 1)
    throw ConfigError("meta.json: unsupported schema_version");
  if (!meta.at("motion_spec").is_null()) {
    for (const auto& step : meta.at("motion_spec")) {
      const std::string type = step.at("type").get<std::string>();
      if (type == "translation")
        check_keys(step, {"type", "dx", "dy"}, "meta.json motion step");
      else if (type == "affine")
        check_keys(step, {"type", "matrix", "offset"}, "meta.json motion step");
      else
        throw ConfigError("meta.json: unsupported motion type " + type);
    }
  }
}

}  // namespace streamvsr::config
