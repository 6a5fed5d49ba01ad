// SPDX-License-Identifier: Apache-2.0
//
// streamvsr CLI: synth | train | infer | eval | bench | ablate | plot.
// Exit codes: 0 success, 2 config error, 3 dependency error, 4 numeric
// divergence, 1 other failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamvsr/config.hpp"
#include "streamvsr/report.hpp"

namespace sv = streamvsr;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;  // -1 = keep the config's seeds
};

sv::config::RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty())
    throw sv::ConfigError("missing --config");
  auto cfg = sv::config::load_run_config(args.config_path);
  if (args.seed >= 0) {
    cfg.seeds.data = static_cast<std::uint64_t>(args.seed);
    cfg.seeds.train = static_cast<std::uint64_t>(args.seed);
    cfg.seeds.stream_base = static_cast<std::uint64_t>(args.seed);
    for (auto& [name, st] : cfg.stages)
      st.seed = static_cast<std::uint64_t>(args.seed);
  }
  return cfg;
}

void write_sequence_pair(const fs::path& dir, const sv::train::SequenceSample& s) {
  sv::synth::write_frames(dir / "hq", s.hq);
  sv::synth::write_frames(dir / "lq", s.lq);
}

sv::train::SequenceSample load_sequence_pair(const fs::path& dir) {
  sv::train::SequenceSample s;
  s.hq = sv::synth::read_frames(dir / "hq");
  s.lq = sv::synth::read_frames(dir / "lq");
  if (s.lq.motion) {
    s.lq_flows = sv::flow::gt_flows_for(s.lq);
  } else {
    for (int t = 1; t < s.lq.t(); ++t)
      s.lq_flows.push_back(sv::flow::estimate_flow_blockmatch(
          s.lq.frames[t - 1], s.lq.frames[t], 8, 4));
  }
  if (s.hq.motion) {
    s.hq_flows = sv::flow::gt_flows_for(s.hq);
  } else {
    for (auto& f : s.lq_flows) s.hq_flows.push_back(sv::flow::upscale_flow(f, 4));
  }
  return s;
}

sv::train::Dataset load_or_synth_dataset(const sv::config::RunConfig& cfg,
                                         const std::string& data_dir) {
  if (data_dir.empty())
    return sv::train::synth_dataset(cfg.data, cfg.seeds.data);
  sv::train::Dataset d;
  for (const char* split : {"train", "val"}) {
    const fs::path root = fs::path(data_dir) / split;
    if (!fs::exists(root))
      throw sv::DependencyError("dataset missing split directory: " +
                                root.string());
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& p : dirs)
      (split == std::string("train") ? d.train : d.val)
          .push_back(load_sequence_pair(p));
  }
  if (d.train.empty()) throw sv::DependencyError("dataset has no training sequences");
  return d;
}

int cmd_synth(const CommonArgs& args) {
  auto cfg = load_config(args);
  if (args.out_dir.empty()) throw sv::ConfigError("synth: missing --out");
  const auto data = sv::train::synth_dataset(cfg.data, cfg.seeds.data);
  const fs::path out(args.out_dir);
  char name[32];
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    std::snprintf(name, sizeof(name), "seq_%03zu", i);
    write_sequence_pair(out / "train" / name, data.train[i]);
  }
  for (std::size_t i = 0; i < data.val.size(); ++i) {
    std::snprintf(name, sizeof(name), "seq_%03zu", i);
    write_sequence_pair(out / "val" / name, data.val[i]);
  }
  sv::config::write_resolved_config(out, cfg);
  std::cout << "wrote " << data.train.size() << " train + " << data.val.size()
            << " val sequences to " << out << "\n";
  return 0;
}

fs::path ckpt_path(const sv::config::RunConfig& cfg, const std::string& out_dir,
                   const std::string& tag) {
  const fs::path base =
      !out_dir.empty() ? fs::path(out_dir)
                       : (!cfg.cache_dir.empty() ? fs::path(cfg.cache_dir)
                                                 : fs::path("."));
  return base / ("ckpt_" + tag + ".svsr");
}

sv::model::ModelBundle load_latest(const sv::config::RunConfig& cfg,
                                   const std::string& out_dir,
                                   const std::vector<std::string>& candidates) {
  for (const auto& tag : candidates) {
    const auto p = ckpt_path(cfg, out_dir, tag);
    if (fs::exists(p)) return sv::model::ModelBundle::load(p);
  }
  std::string tried;
  for (const auto& tag : candidates) tried += " " + tag;
  throw sv::DependencyError("no prerequisite checkpoint found; looked for:" +
                            tried);
}

void emit_reports(const fs::path& dir, const std::string& tag,
                  const sv::train::TrainReport& report) {
  sv::report::write_train_report_csv(dir / ("train_" + tag + ".csv"), report);
  sv::report::write_train_report_json(dir / ("train_" + tag + ".json"), report);
}

int cmd_train(const CommonArgs& args, const std::string& stage,
              const std::string& data_dir) {
  auto cfg = load_config(args);
  if (args.out_dir.empty()) throw sv::ConfigError("train: missing --out");
  const fs::path out(args.out_dir);
  fs::create_directories(out);
  const auto data = load_or_synth_dataset(cfg, data_dir);
  const auto sched = cfg.make_schedule();
  const auto plan = cfg.make_plan();
  sv::config::write_resolved_config(out, cfg);

  if (stage == "0") {
    auto bundle = sv::model::ModelBundle::init(cfg.model_cfg, cfg.seeds.init);
    auto reports = sv::train::pretrain_teacher_and_codec(
        bundle, data, sched, cfg.stage("codec"), cfg.stage("teacher"));
    bundle.save(ckpt_path(cfg, args.out_dir, "stage0"));
    emit_reports(out, "stage0_codec", reports[0]);
    emit_reports(out, "stage0_teacher", reports[1]);
  } else if (stage == "1") {
    auto bundle = load_latest(cfg, args.out_dir, {"stage0"});
    auto report = sv::train::distill_rollout(bundle, data, sched, plan,
                                             cfg.stage("distill"));
    bundle.save(ckpt_path(cfg, args.out_dir, "stage1"));
    emit_reports(out, "stage1", report);
  } else if (stage == "1-random") {
    auto bundle = load_latest(cfg, args.out_dir, {"stage0"});
    auto report = sv::train::distill_random_timestep(
        bundle, data, sched, plan, cfg.stage("distill_random"));
    bundle.save(ckpt_path(cfg, args.out_dir, "stage1_random"));
    emit_reports(out, "stage1_random", report);
  } else if (stage == "2") {
    auto bundle = load_latest(cfg, args.out_dir, {"stage1", "stage0"});
    auto report = sv::train::train_tpm(bundle, data, cfg.stage("tpm"));
    bundle.save(ckpt_path(cfg, args.out_dir, "stage2"));
    emit_reports(out, "stage2", report);
  } else if (stage == "3") {
    auto bundle = load_latest(cfg, args.out_dir, {"stage2"});
    auto report =
        sv::train::train_artg(bundle, data, sched, plan, cfg.stage("artg"));
    bundle.save(ckpt_path(cfg, args.out_dir, "stage3"));
    emit_reports(out, "stage3", report);
  } else if (stage == "matrix") {
    auto base = load_latest(cfg, args.out_dir, {"stage0"});
    std::map<std::string, sv::train::StageConfig> stage_cfgs(
        cfg.stages.begin(), cfg.stages.end());
    auto rows = sv::train::run_stage_matrix(
        base, data, sched, plan, stage_cfgs,
        {"1+2", "1+3", "2+3", "joint", "separate"});
    sv::report::write_matrix_csv(out / "stage_matrix.csv", rows);
    std::cout << "stage matrix written to " << (out / "stage_matrix.csv")
              << "\n";
  } else {
    throw sv::ConfigError("train: unknown --stage " + stage +
                          " (want 0|1|1-random|2|3|matrix)");
  }
  std::cout << "train stage " << stage << " done\n";
  return 0;
}

int cmd_infer(const CommonArgs& args, const std::string& in_dir,
              const std::string& ckpt, bool pipe_mode) {
  auto cfg = load_config(args);
  if (in_dir.empty()) throw sv::ConfigError("infer: missing --in");
  if (ckpt.empty()) throw sv::ConfigError("infer: missing --ckpt");
  if (args.out_dir.empty() && !pipe_mode)
    throw sv::ConfigError("infer: missing --out (or use --pipe)");
  auto bundle = sv::model::ModelBundle::load(ckpt);
  const auto sched = cfg.make_schedule();
  const auto plan = cfg.make_plan();
  const auto lq = sv::synth::read_frames(in_dir);

  std::string flow_source;
  std::vector<sv::flow::FlowField> flows;
  if (lq.motion) {
    flow_source = "ground-truth";
    flows = sv::flow::gt_flows_for(lq);
  } else {
    flow_source = "block-matching";
    for (int t = 1; t < lq.t(); ++t)
      flows.push_back(sv::flow::estimate_flow_blockmatch(lq.frames[t - 1],
                                                         lq.frames[t], 8, 4));
  }

  sv::stream::InferOptions opts;
  opts.base_seed = cfg.seeds.stream_base;
  const fs::path out(args.out_dir.empty() ? "." : args.out_dir);
  if (!pipe_mode) fs::create_directories(out);

  // Emit each frame the moment it is ready: files appear incrementally, or
  // length-prefixed PPM records stream over stdout.
  char name[32];
  sv::stream::FrameSink sink = [&](int index, const sv::Tensor& hq) {
    if (pipe_mode) {
      std::ostringstream record;
      record << "P6\n" << hq.w() << " " << hq.h() << "\n255\n";
      for (int y = 0; y < hq.h(); ++y)
        for (int x = 0; x < hq.w(); ++x)
          for (int c = 0; c < 3; ++c) {
            double v = hq.at(c, y, x);
            v = v < 0 ? 0 : (v > 1 ? 1 : v);
            record.put(static_cast<char>(std::lround(v * 255.0)));
          }
      const std::string bytes = record.str();
      const std::uint64_t len = bytes.size();
      std::fwrite(&len, sizeof(len), 1, stdout);
      std::fwrite(bytes.data(), 1, bytes.size(), stdout);
      std::fflush(stdout);
    } else {
      std::snprintf(name, sizeof(name), "frame_%06d.ppm", index);
      sv::synth::write_ppm(out / name, hq);
    }
  };

  std::size_t i = 0;
  sv::stream::FrameSource source = [&]()
      -> std::optional<std::pair<sv::Tensor, std::optional<sv::flow::FlowField>>> {
    if (i >= lq.frames.size()) return std::nullopt;
    std::optional<sv::flow::FlowField> f;
    if (i > 0) f = flows[i - 1];
    auto item = std::make_pair(lq.frames[i], std::move(f));
    ++i;
    return item;
  };
  auto result = sv::stream::process_stream(source, bundle, sched, plan, opts, sink);

  if (!pipe_mode) {
    result.outputs.fps = lq.fps;
    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["plan"] = plan.steps;
    manifest["seeds"] = {{"stream_base", opts.base_seed}};
    manifest["flow_source"] = flow_source;
    manifest["checkpoint"] = ckpt;
    nlohmann::json lat;
    lat["runtime_s"] = result.profile.runtime;
    lat["latency_first_s"] = result.profile.latency_first;
    lat["latency_avg_s"] = result.profile.latency_avg;
    lat["latency_max_s"] = result.profile.latency_max;
    manifest["latency"] = lat;
    std::ofstream mf(out / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << "\n";
    // Sidecar so the output directory is a valid sequence directory too.
    nlohmann::json meta;
    meta["schema_version"] = 1;
    meta["fps"] = lq.fps;
    meta["frames"] = static_cast<int>(result.outputs.frames.size());
    meta["height"] = result.outputs.h();
    meta["width"] = result.outputs.w();
    meta["motion_spec"] = nullptr;
    std::ofstream ms(out / "meta.json", std::ios::trunc);
    ms << meta.dump(2) << "\n";
    sv::config::write_resolved_config(out, cfg);
    std::cout << "wrote " << result.outputs.frames.size() << " frames to "
              << out << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& out_dir, const std::string& gt_dir,
             const std::string& report_dir) {
  if (out_dir.empty() || gt_dir.empty())
    throw sv::ConfigError("eval: need --out and --gt");
  const fs::path report_path(report_dir.empty() ? out_dir : report_dir);

  auto list_sequences = [](const fs::path& root) {
    std::vector<fs::path> dirs;
    if (fs::exists(root / "meta.json")) {
      dirs.push_back(root);
      return dirs;
    }
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory() && fs::exists(e.path() / "meta.json"))
        dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
  };
  const auto out_seqs = list_sequences(out_dir);
  const auto gt_seqs = list_sequences(gt_dir);
  if (out_seqs.size() != gt_seqs.size() || out_seqs.empty())
    throw sv::ArgumentError("eval: output/GT sequence counts differ or empty");

  std::vector<sv::report::SequenceRow> rows;
  for (std::size_t i = 0; i < out_seqs.size(); ++i) {
    const auto out_seq = sv::synth::read_frames(out_seqs[i]);
    const auto gt_seq = sv::synth::read_frames(gt_seqs[i]);
    sv::report::SequenceRow row;
    row.name = gt_seqs[i].filename().string();
    row.m.psnr = sv::metrics::psnr(out_seq.frames, gt_seq.frames);
    row.m.ssim = sv::metrics::ssim(out_seq.frames, gt_seq.frames);
    row.m.pproxy =
        sv::metrics::perceptual_distance(out_seq.frames, gt_seq.frames);
    if (gt_seq.t() >= 2) {
      std::vector<sv::flow::FlowField> gt_flows;
      const std::vector<sv::flow::FlowField>* flows_ptr = nullptr;
      if (gt_seq.motion) {
        gt_flows = sv::flow::gt_flows_for(gt_seq);
        flows_ptr = &gt_flows;
      }
      row.m.tlp = sv::metrics::tlp(out_seq.frames, gt_seq.frames);
      row.m.tof = sv::metrics::tof(out_seq.frames, gt_seq.frames, flows_ptr);
      if (flows_ptr) row.m.warp_err = sv::flow::warp_error(out_seq.frames, gt_flows);
    }
    rows.push_back(std::move(row));
  }

  std::optional<sv::report::LatencyColumns> latency;
  const fs::path manifest = fs::path(out_dir) / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream mf(manifest);
    nlohmann::json j;
    mf >> j;
    if (j.contains("latency")) {
      sv::report::LatencyColumns lc;
      lc.runtime_s = j["latency"].value("runtime_s", 0.0);
      lc.latency_first_s = j["latency"].value("latency_first_s", 0.0);
      lc.latency_avg_s = j["latency"].value("latency_avg_s", 0.0);
      lc.latency_max_s = j["latency"].value("latency_max_s", 0.0);
      latency = lc;
    }
  }
  sv::report::write_metrics_csv(report_path / "metrics.csv", rows, latency);
  sv::report::write_metrics_json(report_path / "metrics.json", rows, latency);
  std::cout << "metrics written to " << (report_path / "metrics.csv") << "\n";
  return 0;
}

int cmd_bench(const CommonArgs& args, const std::string& ckpt,
              const std::string& steps_arg) {
  auto cfg = load_config(args);
  if (ckpt.empty()) throw sv::ConfigError("bench: missing --ckpt");
  if (args.out_dir.empty()) throw sv::ConfigError("bench: missing --out");
  auto bundle = sv::model::ModelBundle::load(ckpt);
  const auto sched = cfg.make_schedule();

  std::vector<int> steps;
  std::stringstream ss(steps_arg);
  for (std::string tok; std::getline(ss, tok, ',');)
    steps.push_back(std::stoi(tok));
  if (steps.empty()) throw sv::ConfigError("bench: empty --steps");

  auto data = sv::train::synth_dataset(cfg.data, cfg.seeds.data);
  sv::stream::InferOptions opts;
  opts.base_seed = cfg.seeds.stream_base;

  std::vector<sv::report::BenchRow> rows;
  for (int k : steps) {
    if (cfg.schedule.t_total % k != 0)
      throw sv::ConfigError("bench: steps " + std::to_string(k) +
                            " does not divide t_total");
    const auto plan = sv::diffusion::rollout_timesteps(cfg.schedule.t_total, k);
    double runtime = 0, pproxy = 0;
    int n = 0;
    for (const auto& seq : data.val) {
      auto res = sv::stream::process_stream(seq.lq.frames, seq.lq_flows,
                                            bundle, sched, plan, opts);
      runtime += res.profile.runtime;
      pproxy +=
          sv::metrics::perceptual_distance(res.outputs.frames, seq.hq.frames);
      ++n;
    }
    rows.push_back({k, runtime / n, pproxy / n, k == cfg.plan_steps});
  }
  const fs::path out(args.out_dir);
  sv::report::write_bench_csv(out / "bench.csv", rows);
  sv::report::write_scatter_svg(out / "bench_scatter.svg", rows);
  sv::config::write_resolved_config(out, cfg);
  std::cout << "bench table written to " << (out / "bench.csv") << "\n";
  return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& ckpt,
               const std::string& switches) {
  auto cfg = load_config(args);
  if (ckpt.empty()) throw sv::ConfigError("ablate: missing --ckpt");
  if (args.out_dir.empty()) throw sv::ConfigError("ablate: missing --out");
  auto bundle = sv::model::ModelBundle::load(ckpt);
  const auto sched = cfg.make_schedule();
  const auto plan = cfg.make_plan();
  auto data = sv::train::synth_dataset(cfg.data, cfg.seeds.data);

  struct RowSpec {
    std::string name;
    sv::stream::InferOptions opts;
  };
  std::vector<RowSpec> specs;
  auto base = sv::stream::InferOptions{};
  base.base_seed = cfg.seeds.stream_base;
  auto with = [&](bool artg, bool tpm, bool unwarped) {
    auto o = base;
    o.use_artg = artg;
    o.use_tpm = tpm;
    o.unwarped_temporal = unwarped;
    return o;
  };
  std::set<std::string> wanted;
  std::stringstream ss(switches);
  for (std::string tok; std::getline(ss, tok, ',');) wanted.insert(tok);
  const bool all = wanted.empty();
  if (all || wanted.count("per-frame"))
    specs.push_back({"per-frame", with(false, false, false)});
  if (all || wanted.count("artg"))
    specs.push_back({"w/o ARTG", with(false, true, false)});
  if (all || wanted.count("tpm"))
    specs.push_back({"w/o TPM", with(true, false, false)});
  if (all || wanted.count("tpm-unwarped"))
    specs.push_back({"TPM (unwarped)", with(true, true, true)});
  specs.push_back({"full", base});

  std::vector<sv::report::AblationRow> rows;
  for (const auto& spec : specs) {
    auto m = sv::train::evaluate_bundle(bundle, data.val, sched, plan, spec.opts);
    rows.push_back({spec.name, m});
  }
  const fs::path out(args.out_dir);
  sv::report::write_ablation_csv(out / "ablation.csv", rows);
  sv::config::write_resolved_config(out, cfg);
  std::cout << "ablation table written to " << (out / "ablation.csv") << "\n";
  return 0;
}

int cmd_plot(const std::string& bench_csv, const std::string& out_svg) {
  if (bench_csv.empty() || out_svg.empty())
    throw sv::ConfigError("plot: need --bench and --out");
  std::ifstream in(bench_csv);
  if (!in) throw sv::IoError("cannot open " + bench_csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<sv::report::BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    sv::report::BenchRow r;
    std::string cell;
    std::getline(ls, cell, ',');
    r.steps = std::stoi(cell);
    std::getline(ls, cell, ',');
    r.runtime_s = std::stod(cell);
    std::getline(ls, cell, ',');
    r.pproxy = std::stod(cell);
    std::getline(ls, cell, ',');
    r.is_default = cell == "yes";
    rows.push_back(r);
  }
  sv::report::write_scatter_svg(out_svg, rows);
  std::cout << "scatter written to " << out_svg << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stream-style causal diffusion video super-resolution toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string stage = "0", data_dir, in_dir, ckpt, steps = "1,4,10,50";
  std::string gt_dir, report_dir, bench_csv, out_svg, switches;
  bool pipe_mode = false;

  auto add_common = [&](CLI::App* cmd, bool with_out = true) {
    cmd->add_option("--config", common.config_path, "run config JSON");
    cmd->add_option("--seed", common.seed, "override config seeds");
    if (with_out) cmd->add_option("--out", common.out_dir, "output directory");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);

  auto* train = app.add_subcommand("train", "run a training stage");
  add_common(train);
  train->add_option("--stage", stage, "0|1|1-random|2|3|matrix");
  train->add_option("--data", data_dir, "dataset directory (from synth)");

  auto* infer = app.add_subcommand("infer", "stream super-resolution");
  add_common(infer);
  infer->add_option("--in", in_dir, "LQ sequence directory");
  infer->add_option("--ckpt", ckpt, "model checkpoint");
  infer->add_flag("--pipe", pipe_mode, "emit length-prefixed PPM to stdout");

  auto* eval = app.add_subcommand("eval", "metrics between outputs and GT");
  eval->add_option("--out", common.out_dir, "output sequence directory");
  eval->add_option("--gt", gt_dir, "ground-truth sequence directory");
  eval->add_option("--report", report_dir, "report directory");

  auto* bench = app.add_subcommand("bench", "step-count runtime/quality table");
  add_common(bench);
  bench->add_option("--ckpt", ckpt, "model checkpoint");
  bench->add_option("--steps", steps, "comma-separated step counts");

  auto* ablate = app.add_subcommand("ablate", "temporal-module ablation table");
  add_common(ablate);
  ablate->add_option("--ckpt", ckpt, "model checkpoint");
  ablate->add_option("--switches", switches,
                     "subset of {artg,tpm,tpm-unwarped,per-frame}");

  auto* plot = app.add_subcommand("plot", "render bench CSV as SVG scatter");
  plot->add_option("--bench", bench_csv, "bench.csv path");
  plot->add_option("--out", out_svg, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(common);
    if (train->parsed()) return cmd_train(common, stage, data_dir);
    if (infer->parsed()) return cmd_infer(common, in_dir, ckpt, pipe_mode);
    if (eval->parsed()) return cmd_eval(common.out_dir, gt_dir, report_dir);
    if (bench->parsed()) return cmd_bench(common, ckpt, steps);
    if (ablate->parsed()) return cmd_ablate(common, ckpt, switches);
    if (plot->parsed()) return cmd_plot(bench_csv, out_svg);
  } catch (const sv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sv::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 3;
  } catch (const sv::NumericDivergenceError& e) {
    std::cerr << "numeric divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
