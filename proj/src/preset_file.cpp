#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "extragrad/models.hpp"

namespace extragrad {

namespace {

using nlohmann::json;

Eigen::VectorXd vector_from(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw std::invalid_argument("problem spec: ragged matrix");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

StepSchedule schedule_from(const json& j, const StepSchedule& fallback) {
  if (j.is_null()) return fallback;
  return StepSchedule(j.value("eta0", fallback.eta0),
                      j.value("exponent_a", fallback.exponent_a));
}

ProblemPreset ev_preset_from(const json& j) {
  DemandChainParams chain;
  const json& cj = j.at("chain");
  chain.n_zones = cj.at("n_zones").get<Eigen::Index>();
  chain.rho = cj.value("rho", 0.0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(chain.n_zones, chain.n_zones);
  chain.A1 = cj.contains("A1") ? matrix_from(cj["A1"]) : zero;
  chain.A2 = cj.contains("A2") ? matrix_from(cj["A2"]) : zero;
  chain.B1 = cj.contains("B1") ? matrix_from(cj["B1"]) : zero;
  chain.B2 = cj.contains("B2") ? matrix_from(cj["B2"]) : zero;
  chain.mean_DA = vector_from(cj.at("mean_DA"));
  chain.mean_DB = vector_from(cj.at("mean_DB"));
  chain.r = vector_from(cj.at("r"));
  if (cj.contains("innovation_cov")) chain.innovation_cov = matrix_from(cj["innovation_cov"]);
  chain.finalize();

  const std::string mode = j.value("gamma_mode", std::string("indicator"));
  EVGameSpec spec{chain, mode == "smooth" ? GammaMode::kSmooth : GammaMode::kIndicator};

  ProblemPreset preset;
  preset.problem = make_ev_problem(spec);
  const bool markov =
      chain.rho != 0.0 || chain.A1.norm() != 0.0 || chain.A2.norm() != 0.0 ||
      chain.B1.norm() != 0.0 || chain.B2.norm() != 0.0;
  preset.noise_model =
      j.value("noise_model", markov ? std::string("markov") : std::string("iid")) == "markov"
          ? NoiseModel::kMarkov
          : NoiseModel::kIid;
  preset.default_algorithm =
      preset.noise_model == NoiseModel::kMarkov ? Algorithm::kTseg : Algorithm::kSeg;
  if (preset.noise_model == NoiseModel::kMarkov) {
    preset.make_kernel = [spec](const DecisionPoint& z0, RngStream stream) {
      auto [a_bar, b_bar] = stationary_demand_means(spec.chain, z0);
      Eigen::VectorXd w0(2 * spec.chain.n_zones);
      w0 << a_bar, b_bar;
      return make_demand_kernel(spec.chain, std::move(w0), stream);
    };
    preset.run_schedule = StepSchedule(0.1, 0.8);
    preset.clt_schedule = StepSchedule(0.15, 1.0 / 1.7);
  } else {
    preset.make_kernel = [spec](const DecisionPoint&, RngStream stream) {
      return make_iid_kernel(spec.chain, stream);
    };
    preset.run_schedule = StepSchedule(0.1, 0.75);
    preset.clt_schedule = StepSchedule(0.1, 0.6);
  }
  return preset;
}

ProblemPreset linear_preset_from(const json& j) {
  LinearFieldSpec spec;
  spec.Q = matrix_from(j.at("Q"));
  spec.noise_cov = j.contains("noise_cov")
                       ? matrix_from(j["noise_cov"])
                       : Eigen::MatrixXd::Identity(spec.Q.rows(), spec.Q.cols());
  ProblemPreset preset;
  preset.problem = make_linear_problem(spec);
  preset.noise_model = NoiseModel::kIid;
  preset.default_algorithm = Algorithm::kSeg;
  preset.run_schedule = StepSchedule(0.3, 0.6);
  preset.clt_schedule = StepSchedule(0.3, 0.6);
  const Eigen::MatrixXd cov = spec.noise_cov;
  preset.make_kernel = [cov](const DecisionPoint&, RngStream stream) {
    return make_gaussian_kernel(cov, stream);
  };
  return preset;
}

}  // namespace

ProblemPreset resolve_preset(const std::string& name_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return make_preset(name_or_path);
  }
  if (!std::filesystem::exists(name_or_path)) {
    throw std::invalid_argument("unknown preset '" + name_or_path +
                                "' (not a built-in name or a problem-spec file)");
  }
  std::ifstream in(name_or_path);
  json j;
  in >> j;
  const std::string type = j.at("type").get<std::string>();
  ProblemPreset preset;
  if (type == "ev") {
    preset = ev_preset_from(j);
  } else if (type == "linear") {
    preset = linear_preset_from(j);
  } else {
    throw std::invalid_argument("problem spec: unknown type '" + type + "'");
  }
  preset.name = name_or_path;
  preset.description = "problem spec from " + name_or_path;
  preset.run_schedule = schedule_from(j.value("run_schedule", json()), preset.run_schedule);
  preset.clt_schedule = schedule_from(j.value("clt_schedule", json()), preset.clt_schedule);
  preset.initial_z = j.contains("initial_z")
                         ? DecisionPoint::from_stacked(vector_from(j["initial_z"]),
                                                       preset.problem.dim_theta)
                         : *preset.problem.saddle;
  return preset;
}

}  // namespace extragrad
