// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "streamvsr/metrics.hpp"
#include "streamvsr/training.hpp"

namespace streamvsr::report {

// Per-sequence evaluation row; learned no-reference metrics are out of scope
// and serialize as "n/a" columns to keep the published column ordering.
struct SequenceRow {
  std::string name;
  train::EvalResult m;
};

struct Aggregate {
  train::EvalResult mean, stddev;
};

Aggregate aggregate(const std::vector<SequenceRow>& rows);

struct LatencyColumns {
  double runtime_s = 0, latency_first_s = 0, latency_avg_s = 0,
         latency_max_s = 0;
};

// Fixed column order: sequence, psnr, ssim, pproxy, then the absent learned
// columns (lpips, dists, musiq, niqe, nrqm, brisque), tlp_x100, tof_x10,
// warp_err, runtime and latency. tLP/tOF values are already scaled by
// 100x/10x; the serializer enforces the suffixed column names.
void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<SequenceRow>& rows,
                       const std::optional<LatencyColumns>& latency);
void write_metrics_json(const std::filesystem::path& file,
                        const std::vector<SequenceRow>& rows,
                        const std::optional<LatencyColumns>& latency);

void write_train_report_csv(const std::filesystem::path& file,
                            const train::TrainReport& report);
void write_train_report_json(const std::filesystem::path& file,
                             const train::TrainReport& report);

struct BenchRow {
  int steps = 0;
  double runtime_s = 0;
  double pproxy = 0;
  bool is_default = false;
};

void write_bench_csv(const std::filesystem::path& file,
                     const std::vector<BenchRow>& rows);
// Quality-vs-runtime scatter (one point per row), hand-rolled SVG.
void write_scatter_svg(const std::filesystem::path& file,
                       const std::vector<BenchRow>& rows);

struct AblationRow {
  std::string name;
  train::EvalResult m;
};

void write_ablation_csv(const std::filesystem::path& file,
                        const std::vector<AblationRow>& rows);

void write_matrix_csv(const std::filesystem::path& file,
                      const std::vector<train::MatrixRow>& rows);

}  // namespace streamvsr::report
