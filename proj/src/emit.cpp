#include "emit.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace extragrad::detail {

using nlohmann::json;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

bool wants(const std::vector<std::string>& emit, const std::string& kind) {
  return std::find(emit.begin(), emit.end(), kind) != emit.end();
}

std::ofstream open_file(const std::string& dir, const std::string& name,
                        std::vector<std::string>& emitted) {
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExperimentError("cannot write " + path.string());
  emitted.push_back(path.string());
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void write_summaries_csv(const ExperimentResult& result, std::ofstream& out) {
  out << "replication_id";
  for (long step : result.checkpoints) out << ",projection_stat_at_" << step;
  for (Eigen::Index i = 0; i < result.z_star.dim(); ++i) out << ",zbar_" << (i + 1);
  out << ",truncation_count\n";
  for (const auto& s : result.summaries) {
    if (s.failure) continue;
    out << s.replication_id;
    for (long step : result.checkpoints) out << ',' << format_double(s.projection_stat.at(step));
    for (Eigen::Index i = 0; i < s.averaged_z.dim(); ++i) {
      out << ',' << format_double(s.averaged_z.stacked()[i]);
    }
    out << ',' << s.truncation_count << '\n';
  }
}

void write_trace_csv(const RunRecord& record, std::ofstream& out) {
  out << "step,distance,suboptimality\n";
  std::size_t si = 0;
  for (const auto& [step, dist] : record.distance_trace) {
    out << step << ',' << format_double(dist) << ',';
    if (si < record.suboptimality_trace.size() && record.suboptimality_trace[si].first == step) {
      out << format_double(record.suboptimality_trace[si].second);
      ++si;
    }
    out << '\n';
  }
}

std::vector<double> checkpoint_projections(const ExperimentResult& result, long step) {
  std::vector<double> proj;
  proj.reserve(result.summaries.size());
  for (const auto& s : result.summaries) {
    if (!s.failure) proj.push_back(s.projection_stat.at(step));
  }
  return proj;
}

void write_histogram_csv(const ExperimentResult& result, std::ofstream& out) {
  out << "checkpoint,bin_lo,bin_hi,density,reference_density\n";
  for (long step : result.checkpoints) {
    const auto samples = checkpoint_projections(result, step);
    if (samples.size() < 2) continue;
    const HistogramQQ h = histogram_and_qq(samples, 40, result.sigma_projection);
    for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i) {
      out << step << ',' << format_double(h.bin_edges[i]) << ','
          << format_double(h.bin_edges[i + 1]) << ',' << format_double(h.densities[i]) << ','
          << format_double(h.reference_density[i]) << '\n';
    }
  }
}

void write_qq_csv(const ExperimentResult& result, std::ofstream& out) {
  out << "checkpoint,normal_quantile,sample_quantile\n";
  for (long step : result.checkpoints) {
    const auto samples = checkpoint_projections(result, step);
    if (samples.size() < 2) continue;
    const HistogramQQ h = histogram_and_qq(samples, 40, result.sigma_projection);
    for (const auto& [q, x] : h.qq) {
      out << step << ',' << format_double(q) << ',' << format_double(x) << '\n';
    }
  }
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_histogram_svg(const HistogramQQ& h, long step, double sigma, std::ofstream& out) {
  constexpr double width = 640, height = 400, ml = 50, mr = 20, mt = 30, mb = 40;
  const double x0 = h.bin_edges.front(), x1 = h.bin_edges.back();
  double ymax = 0;
  for (double d : h.densities) ymax = std::max(ymax, d);
  for (double d : h.reference_density) ymax = std::max(ymax, d);
  ymax *= 1.1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - y / ymax * (height - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << svg_num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">projection statistic after " << step
      << " steps (sigma=" << svg_num(sigma) << ")</text>\n";
  for (std::size_t i = 0; i < h.densities.size(); ++i) {
    const double bx = px(h.bin_edges[i]);
    const double bw = px(h.bin_edges[i + 1]) - bx;
    const double by = py(h.densities[i]);
    out << "<rect x=\"" << svg_num(bx) << "\" y=\"" << svg_num(by) << "\" width=\"" << svg_num(bw)
        << "\" height=\"" << svg_num(height - mb - by) << "\" fill=\"#7aa6d9\" stroke=\"#3c6ea5\" "
        << "stroke-width=\"0.5\"/>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#c23b22\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < h.reference_density.size(); ++i) {
    const double cx = 0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]);
    out << svg_num(px(cx)) << ',' << svg_num(py(h.reference_density[i])) << ' ';
  }
  out << "\"/>\n";
  out << "<line x1=\"" << svg_num(ml) << "\" y1=\"" << svg_num(height - mb) << "\" x2=\""
      << svg_num(width - mr) << "\" y2=\"" << svg_num(height - mb)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = x0 + (x1 - x0) * t / 4.0;
    out << "<text x=\"" << svg_num(px(x)) << "\" y=\"" << svg_num(height - mb + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << svg_num(x)
        << "</text>\n";
  }
  out << "</svg>\n";
}

json report_json(const ExperimentResult& result) {
  json j;
  // Echo the experiment identity only: worker count, output paths and emit
  // selection do not affect any emitted number.
  json echo = json::parse(result.config.canonical_json());
  echo.erase("threads");
  echo.erase("output_dir");
  echo.erase("emit");
  j["config"] = echo;
  j["algorithm"] = result.algorithm;
  j["schedule"] = {{"eta0", result.schedule.eta0}, {"exponent_a", result.schedule.exponent_a}};
  j["equilibrium"] = vector_to_json(result.z_star.stacked());
  j["checkpoints"] = result.checkpoints;
  j["n_replications"] = result.config.n_replications;
  j["n_success"] = result.config.n_replications - result.n_failed;
  j["n_failed"] = result.n_failed;
  json failures = json::array();
  for (const auto& s : result.summaries) {
    if (s.failure) failures.push_back({{"replication_id", s.replication_id}, {"reason", *s.failure}});
  }
  j["failures"] = failures;
  j["q_star"] = matrix_to_json(result.q_star);
  j["sigma_noise"] = matrix_to_json(result.sigma_noise);
  j["covariance_empirical"] = matrix_to_json(result.covariance.empirical);
  j["covariance_theoretical"] = matrix_to_json(result.covariance.theoretical);
  j["frobenius_rel_error"] = result.covariance.frobenius_rel_error;
  json projections = json::array();
  for (const auto& p : result.covariance.projection_variances) {
    projections.push_back(
        {{"direction", p.direction}, {"empirical", p.empirical}, {"theoretical", p.theoretical}});
  }
  j["projection_variances"] = projections;
  j["sigma_projection"] = result.sigma_projection;
  json ks = json::object();
  json ks_pass = json::object();
  for (const auto& [step, stat] : result.ks) {
    ks[std::to_string(step)] = stat;
    ks_pass[std::to_string(step)] = stat < result.ks_critical;
  }
  j["ks"] = ks;
  j["ks_pass"] = ks_pass;
  j["ks_critical_1pct"] = result.ks_critical;
  j["stats_pass"] = result.stats_pass;
  return j;
}

}  // namespace

void validate_emit(const std::vector<std::string>& emit,
                   const std::vector<std::string>& allowed) {
  for (const auto& kind : emit) {
    if (std::find(allowed.begin(), allowed.end(), kind) == allowed.end()) {
      std::string expected;
      for (const auto& a : allowed) expected += (expected.empty() ? "" : ", ") + a;
      throw ExperimentError("unknown emit kind '" + kind + "' (expected " + expected + ")");
    }
  }
}

void emit_experiment_files(ExperimentResult& result) {
  const ExperimentConfig& config = result.config;
  validate_emit(config.emit, {"csv", "json", "svg"});
  if (config.output_dir.empty() || config.emit.empty()) return;
  std::filesystem::create_directories(config.output_dir);

  if (wants(config.emit, "csv")) {
    auto out = open_file(config.output_dir, "summaries.csv", result.emitted_files);
    write_summaries_csv(result, out);
    if (result.trace_record) {
      auto trace = open_file(config.output_dir, "trace.csv", result.emitted_files);
      write_trace_csv(*result.trace_record, trace);
    }
    auto hist = open_file(config.output_dir, "histogram.csv", result.emitted_files);
    write_histogram_csv(result, hist);
    auto qq = open_file(config.output_dir, "qq.csv", result.emitted_files);
    write_qq_csv(result, qq);
  }
  if (wants(config.emit, "json")) {
    auto out = open_file(config.output_dir, "report.json", result.emitted_files);
    out << report_json(result).dump(2) << '\n';
  }
  if (wants(config.emit, "svg")) {
    for (long step : result.checkpoints) {
      const auto samples = checkpoint_projections(result, step);
      if (samples.size() < 2) continue;
      const HistogramQQ h = histogram_and_qq(samples, 40, result.sigma_projection);
      auto out =
          open_file(config.output_dir, "histogram_" + std::to_string(step) + ".svg",
                    result.emitted_files);
      write_histogram_svg(h, step, result.sigma_projection, out);
    }
  }
}

void emit_divergence_files(const DivergenceDemoParams& params, DivergenceTable& table) {
  validate_emit(params.emit, {"csv", "json"});
  if (params.output_dir.empty() || params.emit.empty()) return;
  std::filesystem::create_directories(params.output_dir);

  if (wants(params.emit, "csv")) {
    auto out = open_file(params.output_dir, "divergence.csv", table.emitted_files);
    out << "step,sgda_mean_sq_norm,seg_mean_sq_norm,seg_mean_dist\n";
    for (std::size_t i = 0; i < table.steps.size(); ++i) {
      out << table.steps[i] << ',' << format_double(table.sgda_mean_sq_norm[i]) << ','
          << format_double(table.seg_mean_sq_norm[i]) << ','
          << format_double(table.seg_mean_dist[i]) << '\n';
    }
  }
  if (wants(params.emit, "json")) {
    json j;
    j["eta"] = params.eta;
    j["n_steps"] = params.n_steps;
    j["n_replications"] = params.n_replications;
    j["seed"] = params.seed;
    j["seg_eta0"] = params.seg_eta0;
    j["seg_exponent"] = params.seg_exponent;
    j["one_step_prediction"] = table.one_step_prediction;
    j["sgda_step1_mean"] = table.sgda_step1_mean;
    j["sgda_step1_se"] = table.sgda_step1_se;
    j["sgda_final_mean_sq_norm"] = table.sgda_mean_sq_norm.back();
    j["seg_final_mean_dist"] = table.seg_mean_dist.back();
    auto out = open_file(params.output_dir, "divergence.json", table.emitted_files);
    out << j.dump(2) << '\n';
  }
}

}  // namespace extragrad::detail
