// SPDX-License-Identifier: Apache-2.0

#include "streamvsr/report.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "streamvsr/errors.hpp"

namespace streamvsr::report {

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path())
    std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  return out;
}

constexpr const char* kMetricHeader =
    "sequence,psnr,ssim,pproxy,lpips,dists,musiq,niqe,nrqm,brisque,"
    "tlp_x100,tof_x10,warp_err,runtime_s,latency_first_s,latency_avg_s,"
    "latency_max_s";

void metric_cells(std::ofstream& out, const train::EvalResult& m) {
  out << m.psnr << "," << m.ssim << "," << m.pproxy
      << ",n/a,n/a,n/a,n/a,n/a,n/a," << m.tlp << "," << m.tof << ","
      << m.warp_err;
}

nlohmann::json metrics_json(const train::EvalResult& m) {
  return {{"psnr", m.psnr},        {"ssim", m.ssim},
          {"pproxy", m.pproxy},    {"lpips", nullptr},
          {"dists", nullptr},      {"musiq", nullptr},
          {"niqe", nullptr},       {"nrqm", nullptr},
          {"brisque", nullptr},    {"tlp_x100", m.tlp},
          {"tof_x10", m.tof},      {"warp_err", m.warp_err}};
}

}  // namespace

Aggregate aggregate(const std::vector<SequenceRow>& rows) {
  Aggregate a;
  if (rows.empty()) return a;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    a.mean.psnr += r.m.psnr;
    a.mean.ssim += r.m.ssim;
    a.mean.pproxy += r.m.pproxy;
    a.mean.tlp += r.m.tlp;
    a.mean.tof += r.m.tof;
    a.mean.warp_err += r.m.warp_err;
  }
  a.mean.psnr /= n;
  a.mean.ssim /= n;
  a.mean.pproxy /= n;
  a.mean.tlp /= n;
  a.mean.tof /= n;
  a.mean.warp_err /= n;
  auto sq = [](double x) { return x * x; };
  for (const auto& r : rows) {
    a.stddev.psnr += sq(r.m.psnr - a.mean.psnr);
    a.stddev.ssim += sq(r.m.ssim - a.mean.ssim);
    a.stddev.pproxy += sq(r.m.pproxy - a.mean.pproxy);
    a.stddev.tlp += sq(r.m.tlp - a.mean.tlp);
    a.stddev.tof += sq(r.m.tof - a.mean.tof);
    a.stddev.warp_err += sq(r.m.warp_err - a.mean.warp_err);
  }
  a.stddev.psnr = std::sqrt(a.stddev.psnr / n);
  a.stddev.ssim = std::sqrt(a.stddev.ssim / n);
  a.stddev.pproxy = std::sqrt(a.stddev.pproxy / n);
  a.stddev.tlp = std::sqrt(a.stddev.tlp / n);
  a.stddev.tof = std::sqrt(a.stddev.tof / n);
  a.stddev.warp_err = std::sqrt(a.stddev.warp_err / n);
  return a;
}

void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<SequenceRow>& rows,
                       const std::optional<LatencyColumns>& latency) {
  auto out = open_out(file);
  out << kMetricHeader << "\n";
  auto latency_cells = [&](bool include) {
    if (include && latency) {
      out << "," << latency->runtime_s << "," << latency->latency_first_s
          << "," << latency->latency_avg_s << "," << latency->latency_max_s;
    } else {
      out << ",n/a,n/a,n/a,n/a";
    }
  };
  for (const auto& r : rows) {
    out << r.name << ",";
    metric_cells(out, r.m);
    latency_cells(false);
    out << "\n";
  }
  const Aggregate a = aggregate(rows);
  out << "mean,";
  metric_cells(out, a.mean);
  latency_cells(true);
  out << "\nstd,";
  metric_cells(out, a.stddev);
  latency_cells(false);
  out << "\n";
}

void write_metrics_json(const std::filesystem::path& file,
                        const std::vector<SequenceRow>& rows,
                        const std::optional<LatencyColumns>& latency) {
  nlohmann::json j;
  j["scaling"] = {{"tlp", "x100"}, {"tof", "x10"}, {"warp_err", "x255"}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    auto row = metrics_json(r.m);
    row["sequence"] = r.name;
    j["rows"].push_back(row);
  }
  const Aggregate a = aggregate(rows);
  j["mean"] = metrics_json(a.mean);
  j["std"] = metrics_json(a.stddev);
  if (latency) {
    j["latency"] = {{"runtime_s", latency->runtime_s},
                    {"latency_first_s", latency->latency_first_s},
                    {"latency_avg_s", latency->latency_avg_s},
                    {"latency_max_s", latency->latency_max_s}};
  }
  auto out = open_out(file);
  out << j.dump(2) << "\n";
}

void write_train_report_csv(const std::filesystem::path& file,
                            const train::TrainReport& report) {
  auto out = open_out(file);
  out << "iter,total,rec,lpips,gan,flow\n";
  for (const auto& r : report.iters)
    out << r.iter << "," << r.total << "," << r.rec << "," << r.lpips << ","
        << r.gan << "," << r.flow << "\n";
}

void write_train_report_json(const std::filesystem::path& file,
                             const train::TrainReport& report) {
  nlohmann::json j;
  j["stage"] = report.stage;
  j["wall_clock_s"] = report.wall_clock_s;
  j["iterations"] = report.iters.size();
  j["final_loss"] = report.final_loss();
  j["eval_snapshot"] = report.eval_snapshot;
  auto out = open_out(file);
  out << j.dump(2) << "\n";
}

void write_bench_csv(const std::filesystem::path& file,
                     const std::vector<BenchRow>& rows) {
  auto out = open_out(file);
  out << "steps,runtime_s,pproxy,default\n";
  for (const auto& r : rows)
    out << r.steps << "," << r.runtime_s << "," << r.pproxy << ","
        << (r.is_default ? "yes" : "no") << "\n";
}

void write_scatter_svg(const std::filesystem::path& file,
                       const std::vector<BenchRow>& rows) {
  if (rows.empty()) throw ArgumentError("write_scatter_svg: no rows");
  double x_max = 0, y_max = 0;
  for (const auto& r : rows) {
    x_max = std::max(x_max, r.runtime_s);
    y_max = std::max(y_max, r.pproxy);
  }
  if (x_max <= 0) x_max = 1;
  if (y_max <= 0) y_max = 1;
  const int w = 640, h = 420, ml = 70, mb = 50, mt = 20, mr = 20;
  auto px = [&](double x) { return ml + (w - ml - mr) * (x / (x_max * 1.1)); };
  auto py = [&](double y) { return h - mb - (h - mt - mb) * (y / (y_max * 1.1)); };
  auto out = open_out(file);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
      << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr
      << "' y2='" << h - mb << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << h - mb << "' stroke='black'/>\n";
  out << "<text x='" << (w / 2) << "' y='" << (h - 12)
      << "' text-anchor='middle' font-size='13'>per-frame runtime (s)</text>\n";
  out << "<text x='16' y='" << (h / 2)
      << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
      << (h / 2) << ")'>perceptual proxy (lower is better)</text>\n";
  for (const auto& r : rows) {
    const double cx = px(r.runtime_s), cy = py(r.pproxy);
    out << "<circle cx='" << cx << "' cy='" << cy << "' r='5' fill='"
        << (r.is_default ? "#d62728" : "#1f77b4") << "'/>\n";
    out << "<text x='" << cx + 8 << "' y='" << cy - 8 << "' font-size='12'>K="
        << r.steps << (r.is_default ? " (default)" : "") << "</text>\n";
  }
  out << "</svg>\n";
}

void write_ablation_csv(const std::filesystem::path& file,
                        const std::vector<AblationRow>& rows) {
  auto out = open_out(file);
  out << "component,psnr,ssim,pproxy,tlp_x100,tof_x10,warp_err\n";
  for (const auto& r : rows)
    out << r.name << "," << r.m.psnr << "," << r.m.ssim << "," << r.m.pproxy
        << "," << r.m.tlp << "," << r.m.tof << "," << r.m.warp_err << "\n";
}

void write_matrix_csv(const std::filesystem::path& file,
                      const std::vector<train::MatrixRow>& rows) {
  auto out = open_out(file);
  out << "stage_combination,psnr,ssim,pproxy,tlp_x100,tof_x10,warp_err,"
         "frozen_groups_used\n";
  for (const auto& r : rows)
    out << r.combo << "," << r.metrics.psnr << "," << r.metrics.ssim << ","
        << r.metrics.pproxy << "," << r.metrics.tlp << "," << r.metrics.tof
        << "," << r.metrics.warp_err << ","
        << (r.any_frozen_during_training ? "yes" : "no") << "\n";
}

}  // namespace streamvsr::report
