#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "extragrad/kernels.hpp"
#include "extragrad/optimizers.hpp"
#include "extragrad/types.hpp"

namespace extragrad {

/// Quality-of-service weight: the unit-ball indicator, or a smooth surrogate
/// that tapers from 1 to 0 over [0.9, 1] for stress tests.
enum class GammaMode { kIndicator, kSmooth };

double gamma_weight(double norm, GammaMode mode);

/// Two-provider relative-profit game over zone demands. The chain supplies
/// the demand samples (a, b); the payoff couples each provider to its demand
/// through revenue terms that are linear in the decision.
struct EVGameSpec {
  DemandChainParams chain;
  GammaMode gamma_mode = GammaMode::kIndicator;
};

/// Stacked stochastic gradient of the game at data sample w = (a, b):
/// [2 gamma_A(theta) theta - (a + r); 2 gamma_B(mu) mu - (b + r)].
GradientSample ev_gradient(const DecisionPoint& z, const KernelState& w, const EVGameSpec& spec);

/// Stationary means of the demand chain frozen at decision z:
/// a-bar = (mean_DA + A1 theta + A2 mu) / (1 - rho), same pattern for b.
std::pair<Eigen::VectorXd, Eigen::VectorXd> stationary_demand_means(const DemandChainParams& chain,
                                                                    const DecisionPoint& z);

/// Solves the first-order conditions 2 theta = a-bar(z) + r, 2 mu = b-bar(z) + r
/// as one (2N)x(2N) linear system and verifies the solution is interior to the
/// unit balls (where the quadratic weight is active).
DecisionPoint equilibrium_solve(const EVGameSpec& spec);

/// Scalar-scalar field that is bilinear [mu, -theta] outside the unit circle
/// and strongly monotone [theta + mu, mu - theta] inside radius 1/2, with
/// additive standard-normal noise taken from the kernel innovation.
GradientSample remark3_gradient(const DecisionPoint& z, const KernelState& w);

/// H(z, w) = Q z + w with w ~ N(0, noise_cov) supplied by the kernel; z* = 0.
struct LinearFieldSpec {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd noise_cov;

  /// Requires every eigenvalue of Q to have strictly positive real part and
  /// noise_cov to be symmetric PSD.
  void validate() const;
};

GradientSample linear_gradient(const DecisionPoint& z, const KernelState& w,
                               const LinearFieldSpec& spec);

SaddleProblem make_ev_problem(const EVGameSpec& spec);
SaddleProblem make_remark3_problem();
SaddleProblem make_linear_problem(const LinearFieldSpec& spec);

enum class NoiseModel { kIid, kMarkov };

/// A named, ready-to-run experiment setup: the problem, a kernel factory, the
/// start point, and default schedules. The clt_schedule decays more gently
/// than run_schedule so that distribution checks see the asymptotic regime
/// within the configured horizon.
struct ProblemPreset {
  std::string name;
  std::string description;
  SaddleProblem problem;
  DecisionPoint initial_z;
  NoiseModel noise_model = NoiseModel::kIid;
  Algorithm default_algorithm = Algorithm::kSeg;
  StepSchedule run_schedule;
  StepSchedule clt_schedule;
  std::function<NoiseKernel(const DecisionPoint& z0, RngStream)> make_kernel;
};

/// Truncation policy paired to a schedule the way the step-size recipe pairs
/// them: epsilon = 1/a - 1 and d_const = c * eta0^(-(1+epsilon)/2), which makes
/// the threshold schedule exactly d_k = c * k^(-1/2).
TruncationPolicy paired_truncation_policy(const StepSchedule& schedule, double c = 1.0);

ProblemPreset make_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Accepts a built-in name, or a path to a JSON problem-spec file describing a
/// zone-demand game ("type": "ev") or a linear field ("type": "linear").
ProblemPreset resolve_preset(const std::string& name_or_path);

/// The chain parameters used by the named EV presets.
DemandChainParams ev_chain_params(bool markov);

}  // namespace extragrad
