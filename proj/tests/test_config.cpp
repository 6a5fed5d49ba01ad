// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "streamvsr/checkpoint.hpp"
#include "streamvsr/config.hpp"

using namespace streamvsr;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("config");

TEST_CASE("a minimal document resolves to the defaults") {
  const auto cfg = config::parse_run_config({{"version", 1}});
  CHECK(cfg.schedule.t_total == 64);
  CHECK(cfg.schedule.beta_min == 1e-4);
  CHECK(cfg.schedule.beta_max == 2e-2);
  CHECK(cfg.plan_steps == 4);
  CHECK(cfg.model_cfg.latent_channels == 4);
  CHECK(cfg.stage("distill").lambda_lpips == 0.5);
  CHECK(cfg.stage("tpm").lambda_flow == 0.1);
  const auto plan = cfg.make_plan();
  CHECK(plan.steps.front() == 63);
}

TEST_CASE("unknown keys are rejected everywhere") {
  CHECK_THROWS_AS(config::parse_run_config({{"version", 1}, {"typo", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(
                      {{"version", 1}, {"data", {{"heigth", 32}}}}),
                  ConfigError);
  CHECK_THROWS_AS(
      config::parse_run_config(
          {{"version", 1}, {"stages", {{"distill", {{"lerning_rate", 1.0}}}}}}),
      ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(
                      {{"version", 1}, {"seeds", {{"stream", 1}}}}),
                  ConfigError);
}

TEST_CASE("version and value constraints are enforced") {
  CHECK_THROWS_AS(config::parse_run_config(nlohmann::json::object()),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config({{"version", 2}}), ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(
                      {{"version", 1}, {"schedule", {{"spacing", "cosine"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(
      config::parse_run_config(
          {{"version", 1}, {"schedule", {{"cond_range", "pm1"}}}}),
      ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(
                      {{"version", 1}, {"plan", {{"steps", 7}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(
                      {{"version", 1}, {"data", {{"height", 30}}}}),
                  ConfigError);
}

TEST_CASE("stage overrides apply and resolved output round-trips") {
  nlohmann::json doc = {
      {"version", 1},
      {"notes", "unit"},
      {"schedule", {{"t_total", 100}, {"beta_max", 0.2}}},
      {"stages", {{"distill", {{"iterations", 7}, {"lr", 1e-3}}}}},
      {"seeds", {{"train", 17}}},
  };
  const auto cfg = config::parse_run_config(doc);
  CHECK(cfg.stage("distill").iterations == 7);
  CHECK(cfg.stage("distill").lr == 1e-3);
  CHECK(cfg.stage("distill").lambda_gan == 0.025);  // untouched default
  CHECK(cfg.stage("codec").seed == 17);             // shared train seed

  const auto round = config::parse_run_config(config::to_json(cfg));
  CHECK(round.schedule.t_total == 100);
  CHECK(round.schedule.beta_max == 0.2);
  CHECK(round.stage("distill").iterations == 7);
}

TEST_CASE("meta.json schema validation is strict") {
  nlohmann::json good = {{"schema_version", 1}, {"fps", 24.0}, {"frames", 2},
                         {"height", 8},         {"width", 8},
                         {"motion_spec", nullptr}};
  CHECK_NOTHROW(config::validate_meta_json(good));

  auto extra = good;
  extra["vendor"] = "x";
  CHECK_THROWS_AS(config::validate_meta_json(extra), ConfigError);

  auto missing = good;
  missing.erase("fps");
  CHECK_THROWS_AS(config::validate_meta_json(missing), ConfigError);

  auto motion = good;
  motion["motion_spec"] = nlohmann::json::array(
      {{{"type", "translation"}, {"dx", 1.0}, {"dy", 0.0}, {"dz", 0.0}}});
  CHECK_THROWS_AS(config::validate_meta_json(motion), ConfigError);
}

TEST_CASE("checkpoints round-trip every parameter bitwise") {
  model::ModelConfig mcfg;
  mcfg.codec_w1 = 8;
  mcfg.codec_w2 = 12;
  mcfg.unet_base = 8;
  mcfg.artg_width = 8;
  mcfg.disc_width = 8;
  auto bundle = model::ModelBundle::init(mcfg, 77);
  bundle.mark_stage("0codec");
  bundle.mark_stage("0teacher");

  const auto dir = fs::temp_directory_path() / "streamvsr_tests" / "ckpt";
  fs::create_directories(dir);
  const auto file = dir / "bundle.svsr";
  bundle.save(file);
  auto back = model::ModelBundle::load(file);

  CHECK(back.cfg.codec_w1 == 8);
  CHECK(back.stages_completed == bundle.stages_completed);
  auto pa = bundle.params();
  auto pb = back.params();
  REQUIRE(pa.size() == pb.size());
  for (const auto& [name, var] : pa) CHECK(var.val().v == pb.at(name).val().v);
}

TEST_CASE("corrupted checkpoints fail to parse with context") {
  const auto dir = fs::temp_directory_path() / "streamvsr_tests" / "ckpt2";
  fs::create_directories(dir);
  const auto file = dir / "bad.svsr";
  std::ofstream out(file, std::ios::binary);
  out << "NOTMAGIC";
  out.close();
  CHECK_THROWS_AS(ckpt::load(file), ParseError);
}

TEST_SUITE_END();
