#pragma once

#include <Eigen/Core>
#include <functional>

#include "extragrad/kernel_state.hpp"
#include "extragrad/types.hpp"

namespace extragrad {

/// Cubic smoothstep ramp: 0 for y <= 1/2, 1 for y >= 1, 3t^2 - 2t^3 in between
/// with t = clamp(2y - 1, 0, 1). Smooth and Lipschitz on the whole line.
double smoothstep_ramp(double y);

/// Parameters of the zone-demand chain
///   a' = D_A + rho * a + A1 * theta + A2 * mu,
///   b' = D_B + rho * b + B1 * theta + B2 * mu,
/// with D_A ~ N(mean_DA, innovation_cov) and D_B ~ N(mean_DB, innovation_cov)
/// drawn fresh each step. An empty innovation_cov means the identity; any
/// other covariance requires finalize(), which factors it and rejects
/// non-positive-semidefinite inputs.
struct DemandChainParams {
  Eigen::Index n_zones = 0;
  double rho = 0.0;
  Eigen::MatrixXd A1, A2, B1, B2;
  Eigen::VectorXd mean_DA, mean_DB;
  Eigen::MatrixXd innovation_cov;      // empty => identity
  Eigen::VectorXd r;                   // zone utility cost, used by the EV game
  Eigen::MatrixXd innovation_factor;   // set by finalize() when innovation_cov given

  void validate() const;
  /// Validates and caches the covariance factor (Cholesky; symmetric square
  /// root on the semidefinite boundary).
  void finalize();

  bool identity_innovations() const { return innovation_cov.size() == 0; }
};

/// One transition of the demand chain driven by the current decision z.
/// state.w is the stacked (a, b) of length 2N.
KernelState sample_demand(const KernelState& state, const DemandChainParams& params,
                          const DecisionPoint& z);

/// Fresh (D_A, D_B) draw, independent of z and history. Consumes the RNG
/// stream exactly like sample_demand, so with rho = 0 and zero couplings the
/// two produce bit-identical sequences for equal seeds.
KernelState sample_iid(const KernelState& state, const DemandChainParams& params);

/// State-dependent kernel with stationary law N(R(|z|) [-theta^2/2, mu^2/2], I2)
/// for fixed z. state.w has length 4: the observable sample followed by the
/// standard-normal innovation it was built from (the gradient oracle needs the
/// innovation at a different evaluation point).
KernelState sample_remark3(const KernelState& state, const DecisionPoint& z);

/// A sampling process bound to its transition law. The state is owned by
/// exactly one run at a time; copies restart from the copied state.
struct NoiseKernel {
  std::function<KernelState(const KernelState&, const DecisionPoint&)> advance;
  KernelState state;
};

/// Demand chain started at the given (a, b).
NoiseKernel make_demand_kernel(const DemandChainParams& params, Eigen::VectorXd initial_ab,
                               RngStream stream);

/// i.i.d. (D_A, D_B) sampling; the initial state holds the innovation means.
NoiseKernel make_iid_kernel(const DemandChainParams& params, RngStream stream);

NoiseKernel make_remark3_kernel(RngStream stream);

/// i.i.d. Gaussian vector draws w ~ N(0, cov), for linear-field problems.
NoiseKernel make_gaussian_kernel(const Eigen::MatrixXd& cov, RngStream stream);

/// Factor F with F F^T = cov; throws on non-PSD input.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov);

}  // namespace extragrad
