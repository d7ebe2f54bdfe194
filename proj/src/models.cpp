#include "extragrad/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace extragrad {

double gamma_weight(double norm, GammaMode mode) {
  if (mode == GammaMode::kIndicator) return norm <= 1.0 ? 1.0 : 0.0;
  // Smooth surrogate: 1 on [0, 0.9], cubic taper to 0 at 1.
  const double t = std::clamp((norm - 0.9) / 0.1, 0.0, 1.0);
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

GradientSample ev_gradient(const DecisionPoint& z, const KernelState& w, const EVGameSpec& spec) {
  const Eigen::Index n = spec.chain.n_zones;
  if (z.dim_theta() != n || z.dim_mu() != n) {
    throw std::invalid_argument("ev_gradient: decision dimensions must equal n_zones");
  }
  if (w.w.size() != 2 * n) {
    throw std::invalid_argument("ev_gradient: kernel sample must be the stacked (a, b)");
  }
  const double ga = gamma_weight(z.theta().norm(), spec.gamma_mode);
  const double gb = gamma_weight(z.mu().norm(), spec.gamma_mode);
  GradientSample g(2 * n);
  g.head(n) = 2.0 * ga * z.theta() - (w.w.head(n) + spec.chain.r);
  g.tail(n) = 2.0 * gb * z.mu() - (w.w.tail(n) + spec.chain.r);
  return g;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> stationary_demand_means(const DemandChainParams& chain,
                                                                    const DecisionPoint& z) {
  const double scale = 1.0 / (1.0 - chain.rho);
  Eigen::VectorXd a_bar = scale * (chain.mean_DA + chain.A1 * z.theta() + chain.A2 * z.mu());
  Eigen::VectorXd b_bar = scale * (chain.mean_DB + chain.B1 * z.theta() + chain.B2 * z.mu());
  return {std::move(a_bar), std::move(b_bar)};
}

DecisionPoint equilibrium_solve(const EVGameSpec& spec) {
  const Eigen::Index n = spec.chain.n_zones;
  const double scale = 1.0 / (1.0 - spec.chain.rho);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd system(2 * n, 2 * n);
  system.topLeftCorner(n, n) = 2.0 * eye - scale * spec.chain.A1;
  system.topRightCorner(n, n) = -scale * spec.chain.A2;
  system.bottomLeftCorner(n, n) = -scale * spec.chain.B1;
  system.bottomRightCorner(n, n) = 2.0 * eye - scale * spec.chain.B2;

  Eigen::VectorXd rhs(2 * n);
  rhs.head(n) = scale * spec.chain.mean_DA + spec.chain.r;
  rhs.tail(n) = scale * spec.chain.mean_DB + spec.chain.r;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw std::runtime_error("equilibrium_solve: singular first-order system");
  }
  const Eigen::VectorXd solution = lu.solve(rhs);
  DecisionPoint z_star = DecisionPoint::from_stacked(solution, n);

  // The linear solve assumed the quadratic weight is active (gamma = 1), which
  // holds only strictly inside the unit balls (inside 0.9 in smooth mode).
  const double limit = spec.gamma_mode == GammaMode::kIndicator ? 1.0 : 0.9;
  if (z_star.theta().norm() >= limit || z_star.mu().norm() >= limit) {
    throw std::runtime_error("equilibrium_solve: boundary equilibrium");
  }
  return z_star;
}

GradientSample remark3_gradient(const DecisionPoint& z, const KernelState& w) {
  if (z.dim_theta() != 1 || z.dim_mu() != 1) {
    throw std::invalid_argument("remark3_gradient: the construction is scalar-scalar");
  }
  if (w.w.size() != 4) {
    throw std::invalid_argument("remark3_gradient: kernel state must carry (sample, innovation)");
  }
  const double ramp = smoothstep_ramp(z.stacked().norm());
  const double theta = z.theta()[0];
  const double mu = z.mu()[0];
  GradientSample g(2);
  g[0] = theta * (1.0 - ramp) + mu + w.w[2];
  g[1] = mu * (1.0 - ramp) - theta + w.w[3];
  return g;
}

void LinearFieldSpec::validate() const {
  if (Q.rows() != Q.cols() || Q.rows() < 2) {
    throw std::invalid_argument("LinearFieldSpec: Q must be square of order >= 2");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(Q);
  if (es.eigenvalues().real().minCoeff() <= 0.0) {
    throw std::invalid_argument("LinearFieldSpec: every eigenvalue of Q needs positive real part");
  }
  psd_factor(noise_cov);  // throws on non-PSD input
}

GradientSample linear_gradient(const DecisionPoint& z, const KernelState& w,
                               const LinearFieldSpec& spec) {
  if (z.dim() != spec.Q.rows() || w.w.size() != spec.Q.rows()) {
    throw std::invalid_argument("linear_gradient: dimension mismatch");
  }
  return spec.Q * z.stacked() + w.w;
}

SaddleProblem make_ev_problem(const EVGameSpec& spec) {
  const Eigen::Index n = spec.chain.n_zones;
  SaddleProblem problem;
  problem.dim_theta = n;
  problem.dim_mu = n;
  problem.stochastic_oracle = [spec](const DecisionPoint& z, const KernelState& w) {
    return ev_gradient(z, w, spec);
  };
  problem.mean_field = [spec, n](const DecisionPoint& z) {
    auto [a_bar, b_bar] = stationary_demand_means(spec.chain, z);
    const double ga = gamma_weight(z.theta().norm(), spec.gamma_mode);
    const double gb = gamma_weight(z.mu().norm(), spec.gamma_mode);
    GradientSample g(2 * n);
    g.head(n) = 2.0 * ga * z.theta() - (a_bar + spec.chain.r);
    g.tail(n) = 2.0 * gb * z.mu() - (b_bar + spec.chain.r);
    return g;
  };
  const DecisionPoint z_star = equilibrium_solve(spec);
  problem.saddle = z_star;
  // Objective with the data distribution frozen at the equilibrium, so the
  // suboptimality measure f(theta, mu*) - f(theta*, mu) is well defined.
  auto [a_star, b_star] = stationary_demand_means(spec.chain, z_star);
  const Eigen::VectorXd cost_a = a_star + spec.chain.r;
  const Eigen::VectorXd cost_b = b_star + spec.chain.r;
  problem.objective = [spec, cost_a, cost_b](const DecisionPoint& p, const DecisionPoint& q) {
    const double ga = gamma_weight(p.theta().norm(), spec.gamma_mode);
    const double gb = gamma_weight(q.mu().norm(), spec.gamma_mode);
    return ga * p.theta().squaredNorm() - gb * q.mu().squaredNorm() - p.theta().dot(cost_a) +
           q.mu().dot(cost_b);
  };
  problem.validate();
  return problem;
}

SaddleProblem make_remark3_problem() {
  SaddleProblem problem;
  problem.dim_theta = 1;
  problem.dim_mu = 1;
  problem.stochastic_oracle = [](const DecisionPoint& z, const KernelState& w) {
    return remark3_gradient(z, w);
  };
  problem.mean_field = [](const DecisionPoint& z) {
    const double ramp = smoothstep_ramp(z.stacked().norm());
    const double theta = z.theta()[0];
    const double mu = z.mu()[0];
    GradientSample g(2);
    g[0] = theta * (1.0 - ramp) + mu;
    g[1] = mu * (1.0 - ramp) - theta;
    return g;
  };
  problem.saddle = DecisionPoint::zero(1, 1);
  problem.validate();
  return problem;
}

SaddleProblem make_linear_problem(const LinearFieldSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.Q.rows();
  const Eigen::Index d_theta = d / 2;
  SaddleProblem problem;
  problem.dim_theta = d_theta;
  problem.dim_mu = d - d_theta;
  problem.stochastic_oracle = [spec](const DecisionPoint& z, const KernelState& w) {
    return linear_gradient(z, w, spec);
  };
  problem.mean_field = [spec](const DecisionPoint& z) -> GradientSample {
    return spec.Q * z.stacked();
  };
  problem.saddle = DecisionPoint::zero(d_theta, d - d_theta);
  problem.validate();
  return problem;
}

TruncationPolicy paired_truncation_policy(const StepSchedule& schedule, double c) {
  TruncationPolicy policy;
  policy.epsilon = 1.0 / schedule.exponent_a - 1.0;
  policy.d_const = c * std::pow(schedule.eta0, -0.5 * (1.0 + policy.epsilon));
  policy.validate();
  return policy;
}

DemandChainParams ev_chain_params(bool markov) {
  DemandChainParams chain;
  chain.n_zones = 3;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  if (markov) {
    chain.rho = 0.4;
    chain.A1 = -0.3 * eye;
    chain.A2 = 0.3 * eye;
    chain.B1 = 0.3 * eye;
    chain.B2 = -0.3 * eye;
  } else {
    chain.rho = 0.0;
    chain.A1 = chain.A2 = chain.B1 = chain.B2 = Eigen::MatrixXd::Zero(3, 3);
  }
  chain.mean_DA = Eigen::VectorXd::Constant(3, 0.1);
  chain.mean_DB = Eigen::VectorXd::Zero(3);
  chain.r = Eigen::VectorXd::Constant(3, 0.3);
  chain.validate();
  return chain;
}

std::vector<std::string> preset_names() { return {"martingale-ev", "markov-ev", "remark3", "linear"}; }

ProblemPreset make_preset(const std::string& name) {
  ProblemPreset preset;
  preset.name = name;
  if (name == "martingale-ev") {
    EVGameSpec spec{ev_chain_params(false), GammaMode::kIndicator};
    preset.description = "zone-demand game, i.i.d. demand draws";
    preset.problem = make_ev_problem(spec);
    preset.initial_z = *preset.problem.saddle;
    preset.noise_model = NoiseModel::kIid;
    preset.default_algorithm = Algorithm::kSeg;
    preset.run_schedule = StepSchedule(0.1, 0.75);
    preset.clt_schedule = StepSchedule(0.1, 0.6);
    preset.make_kernel = [spec](const DecisionPoint&, RngStream stream) {
      return make_iid_kernel(spec.chain, stream);
    };
  } else if (name == "markov-ev") {
    EVGameSpec spec{ev_chain_params(true), GammaMode::kIndicator};
    preset.description = "zone-demand game, decision-dependent AR(1) demand chain";
    preset.problem = make_ev_problem(spec);
    preset.initial_z = *preset.problem.saddle;
    preset.noise_model = NoiseModel::kMarkov;
    preset.default_algorithm = Algorithm::kTseg;
    preset.run_schedule = StepSchedule(0.1, 0.8);
    preset.clt_schedule = StepSchedule(0.15, 1.0 / 1.7);
    preset.make_kernel = [spec](const DecisionPoint& z0, RngStream stream) {
      auto [a_bar, b_bar] = stationary_demand_means(spec.chain, z0);
      Eigen::VectorXd w0(2 * spec.chain.n_zones);
      w0 << a_bar, b_bar;
      return make_demand_kernel(spec.chain, std::move(w0), stream);
    };
  } else if (name == "remark3") {
    preset.description = "scalar game that turns bilinear under decision-dependent sampling";
    preset.problem = make_remark3_problem();
    preset.initial_z = DecisionPoint(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1));
    preset.noise_model = NoiseModel::kMarkov;
    preset.default_algorithm = Algorithm::kSeg;
    preset.run_schedule = StepSchedule(0.1, 0.75);
    preset.clt_schedule = StepSchedule(0.1, 0.6);
    preset.make_kernel = [](const DecisionPoint&, RngStream stream) {
      return make_remark3_kernel(stream);
    };
  } else if (name == "linear") {
    LinearFieldSpec spec;
    spec.Q = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    spec.noise_cov = Eigen::MatrixXd::Identity(2, 2);
    preset.description = "linear field H(z) = Qz with Gaussian noise, Q = 2I";
    preset.problem = make_linear_problem(spec);
    preset.initial_z = *preset.problem.saddle;
    preset.noise_model = NoiseModel::kIid;
    preset.default_algorithm = Algorithm::kSeg;
    preset.run_schedule = StepSchedule(0.3, 0.6);
    preset.clt_schedule = StepSchedule(0.3, 0.6);
    const Eigen::MatrixXd cov = spec.noise_cov;
    preset.make_kernel = [cov](const DecisionPoint&, RngStream stream) {
      return make_gaussian_kernel(cov, stream);
    };
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return preset;
}

}  // namespace extragrad
