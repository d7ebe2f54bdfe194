#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <stdexcept>

#include "extragrad/kernel_state.hpp"

namespace extragrad {

/// Stacked field sample [grad_theta f; -grad_mu f] evaluated with one data draw.
using GradientSample = Eigen::VectorXd;

/// Joint decision z = (theta, mu) of the min and max players, stored stacked.
class DecisionPoint {
 public:
  DecisionPoint() = default;

  DecisionPoint(const Eigen::VectorXd& theta, const Eigen::VectorXd& mu)
      : z_(theta.size() + mu.size()), dim_theta_(theta.size()) {
    if (theta.size() < 1 || mu.size() < 1) {
      throw std::invalid_argument("DecisionPoint: both players need dimension >= 1");
    }
    z_ << theta, mu;
  }

  static DecisionPoint from_stacked(Eigen::VectorXd z, Eigen::Index dim_theta) {
    if (dim_theta < 1 || z.size() - dim_theta < 1) {
      throw std::invalid_argument("DecisionPoint: both players need dimension >= 1");
    }
    DecisionPoint p;
    p.z_ = std::move(z);
    p.dim_theta_ = dim_theta;
    return p;
  }

  static DecisionPoint zero(Eigen::Index dim_theta, Eigen::Index dim_mu) {
    return from_stacked(Eigen::VectorXd::Zero(dim_theta + dim_mu), dim_theta);
  }

  Eigen::Index dim_theta() const { return dim_theta_; }
  Eigen::Index dim_mu() const { return z_.size() - dim_theta_; }
  Eigen::Index dim() const { return z_.size(); }

  auto theta() const { return z_.head(dim_theta_); }
  auto mu() const { return z_.tail(z_.size() - dim_theta_); }
  const Eigen::VectorXd& stacked() const { return z_; }

  /// Same split as *this, different coordinates.
  DecisionPoint with_stacked(Eigen::VectorXd z) const {
    return from_stacked(std::move(z), dim_theta_);
  }

  bool same_shape(const DecisionPoint& other) const {
    return dim_theta_ == other.dim_theta_ && z_.size() == other.z_.size();
  }

 private:
  Eigen::VectorXd z_;
  Eigen::Index dim_theta_ = 0;
};

/// Polynomially decaying step size eta_k = eta0 * k^(-a) with a in (1/2, 1),
/// so that sum eta_k diverges while sum eta_k^2 converges.
struct StepSchedule {
  double eta0 = 0.1;
  double exponent_a = 0.75;

  StepSchedule() = default;
  StepSchedule(double eta0_in, double a_in) : eta0(eta0_in), exponent_a(a_in) { validate(); }

  void validate() const {
    if (!(eta0 > 0.0)) throw std::invalid_argument("StepSchedule: eta0 must be positive");
    if (!(exponent_a > 0.5) || !(exponent_a < 1.0)) {
      throw std::invalid_argument("StepSchedule: exponent must lie in (1/2, 1)");
    }
  }
};

/// eta_k for 1-indexed k.
double step_size(const StepSchedule& schedule, long k);

/// Problem descriptor: a stochastic oracle for H(z, w), and, when available,
/// the mean field H(z), the saddle z*, and the objective for diagnostics.
/// objective(a, b) evaluates f(a.theta, b.mu), so the suboptimality measure is
/// objective(z, z*) - objective(z*, z).
struct SaddleProblem {
  Eigen::Index dim_theta = 0;
  Eigen::Index dim_mu = 0;
  std::function<GradientSample(const DecisionPoint&, const KernelState&)> stochastic_oracle;
  std::function<GradientSample(const DecisionPoint&)> mean_field;
  std::optional<DecisionPoint> saddle;
  std::function<double(const DecisionPoint&, const DecisionPoint&)> objective;

  bool has_mean_field() const { return static_cast<bool>(mean_field); }
  bool has_objective() const { return static_cast<bool>(objective); }

  /// Checks dimensions and, when both are present, that the mean field
  /// vanishes at the declared saddle.
  void validate() const;
};

/// G(z) = f(theta, mu*) - f(theta*, mu); nonnegative for convex-concave f and
/// zero exactly at the saddle. Throws when the saddle or objective is unknown.
double suboptimality(const SaddleProblem& problem, const DecisionPoint& z);

/// One step of the streaming mean: mean <- mean + (z_n - mean)/n. previous_mean
/// must be the mean of the first n-1 iterates (any point when n = 1).
DecisionPoint running_average(const DecisionPoint& previous_mean, const DecisionPoint& new_iterate,
                              long n);

}  // namespace extragrad
