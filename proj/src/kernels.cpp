#include "extragrad/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace extragrad {

double smoothstep_ramp(double y) {
  const double t = std::clamp(2.0 * y - 1.0, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("psd_factor: matrix must be square");
  if (!cov.isApprox(cov.transpose(), 1e-12)) {
    throw std::invalid_argument("psd_factor: matrix must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semidefinite boundary (e.g. the zero matrix): symmetric square root.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw std::invalid_argument("psd_factor: matrix is not positive semidefinite");
  }
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * clipped.asDiagonal();
}

void DemandChainParams::validate() const {
  const Eigen::Index n = n_zones;
  if (n < 1) throw std::invalid_argument("DemandChainParams: n_zones must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("DemandChainParams: rho must lie in [0, 1)");
  }
  auto check = [n](const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != n || m.cols() != n) {
      throw std::invalid_argument(std::string("DemandChainParams: bad dimensions for ") + name);
    }
  };
  check(A1, "A1");
  check(A2, "A2");
  check(B1, "B1");
  check(B2, "B2");
  if (mean_DA.size() != n || mean_DB.size() != n || r.size() != n) {
    throw std::invalid_argument("DemandChainParams: mean/r vectors must have length n_zones");
  }
  if (innovation_cov.size() != 0 && innovation_factor.size() == 0) {
    throw std::invalid_argument("DemandChainParams: call finalize() for a custom innovation_cov");
  }
}

void DemandChainParams::finalize() {
  if (innovation_cov.size() != 0) {
    if (innovation_cov.rows() != n_zones || innovation_cov.cols() != n_zones) {
      throw std::invalid_argument("DemandChainParams: innovation_cov must be n_zones x n_zones");
    }
    innovation_factor = psd_factor(innovation_cov);
  }
  validate();
}

namespace {

// Draws N(mean, cov) using n_zones sequential normals from the stream.
Eigen::VectorXd draw_innovation(const Eigen::VectorXd& mean, const DemandChainParams& params,
                                RngStream& rng) {
  Eigen::VectorXd g(params.n_zones);
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.normal();
  if (params.identity_innovations()) return mean + g;
  return mean + params.innovation_factor * g;
}

}  // namespace

KernelState sample_demand(const KernelState& state, const DemandChainParams& params,
                          const DecisionPoint& z) {
  const Eigen::Index n = params.n_zones;
  if (state.w.size() != 2 * n) {
    throw std::invalid_argument("sample_demand: state.w must be the stacked (a, b) of length 2N");
  }
  if (z.dim_theta() != n || z.dim_mu() != n) {
    throw std::invalid_argument("sample_demand: decision dimensions must equal n_zones");
  }
  KernelState next = state;
  const Eigen::VectorXd d_a = draw_innovation(params.mean_DA, params, next.rng);
  const Eigen::VectorXd d_b = draw_innovation(params.mean_DB, params, next.rng);
  next.w.head(n) = d_a + params.rho * state.w.head(n) + params.A1 * z.theta() + params.A2 * z.mu();
  next.w.tail(n) = d_b + params.rho * state.w.tail(n) + params.B1 * z.theta() + params.B2 * z.mu();
  return next;
}

KernelState sample_iid(const KernelState& state, const DemandChainParams& params) {
  const Eigen::Index n = params.n_zones;
  if (state.w.size() != 2 * n) {
    throw std::invalid_argument("sample_iid: state.w must be the stacked (a, b) of length 2N");
  }
  KernelState next = state;
  next.w.head(n) = draw_innovation(params.mean_DA, params, next.rng);
  next.w.tail(n) = draw_innovation(params.mean_DB, params, next.rng);
  return next;
}

KernelState sample_remark3(const KernelState& state, const DecisionPoint& z) {
  if (z.dim_theta() != 1 || z.dim_mu() != 1) {
    throw std::invalid_argument("sample_remark3: the construction is scalar-scalar");
  }
  if (state.w.size() != 4) {
    throw std::invalid_argument("sample_remark3: state.w must have length 4 (sample, innovation)");
  }
  KernelState next = state;
  const double ramp = smoothstep_ramp(z.stacked().norm());
  const double rho1 = next.rng.normal();
  const double rho2 = next.rng.normal();
  const double theta = z.theta()[0];
  const double mu = z.mu()[0];
  next.w[0] = ramp * (-0.5 * theta * theta) + rho1;
  next.w[1] = ramp * (0.5 * mu * mu) + rho2;
  next.w[2] = rho1;
  next.w[3] = rho2;
  return next;
}

NoiseKernel make_demand_kernel(const DemandChainParams& params, Eigen::VectorXd initial_ab,
                               RngStream stream) {
  params.validate();
  if (initial_ab.size() != 2 * params.n_zones) {
    throw std::invalid_argument("make_demand_kernel: initial state must have length 2N");
  }
  NoiseKernel kernel;
  kernel.state = KernelState{std::move(initial_ab), stream};
  kernel.advance = [params](const KernelState& s, const DecisionPoint& z) {
    return sample_demand(s, params, z);
  };
  return kernel;
}

NoiseKernel make_iid_kernel(const DemandChainParams& params, RngStream stream) {
  params.validate();
  Eigen::VectorXd w0(2 * params.n_zones);
  w0 << params.mean_DA, params.mean_DB;
  NoiseKernel kernel;
  kernel.state = KernelState{std::move(w0), stream};
  kernel.advance = [params](const KernelState& s, const DecisionPoint&) {
    return sample_iid(s, params);
  };
  return kernel;
}

NoiseKernel make_remark3_kernel(RngStream stream) {
  NoiseKernel kernel;
  kernel.state = KernelState{Eigen::VectorXd::Zero(4), stream};
  kernel.advance = [](const KernelState& s, const DecisionPoint& z) {
    return sample_remark3(s, z);
  };
  return kernel;
}

NoiseKernel make_gaussian_kernel(const Eigen::MatrixXd& cov, RngStream stream) {
  const Eigen::MatrixXd factor = psd_factor(cov);
  NoiseKernel kernel;
  kernel.state = KernelState{Eigen::VectorXd::Zero(cov.rows()), stream};
  kernel.advance = [factor](const KernelState& s, const DecisionPoint&) {
    KernelState next = s;
    Eigen::VectorXd g(factor.cols());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = next.rng.normal();
    next.w = factor * g;
    return next;
  };
  return kernel;
}

}  // namespace extragrad
