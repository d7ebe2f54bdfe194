#include "extragrad/types.hpp"

#include <cmath>

namespace extragrad {

double step_size(const StepSchedule& schedule, long k) {
  if (k < 1) throw std::invalid_argument("step_size: schedule is 1-indexed, k must be >= 1");
  return schedule.eta0 * std::pow(static_cast<double>(k), -schedule.exponent_a);
}

void SaddleProblem::validate() const {
  if (dim_theta < 1 || dim_mu < 1) {
    throw std::invalid_argument("SaddleProblem: dimensions must be >= 1");
  }
  if (!stochastic_oracle) {
    throw std::invalid_argument("SaddleProblem: stochastic oracle is required");
  }
  if (saddle) {
    if (saddle->dim_theta() != dim_theta || saddle->dim_mu() != dim_mu) {
      throw std::invalid_argument("SaddleProblem: saddle dimensions do not match");
    }
    if (mean_field) {
      const double residual = mean_field(*saddle).norm();
      if (!(residual <= 1e-8)) {
        throw std::invalid_argument("SaddleProblem: declared saddle is not a zero of the mean field");
      }
    }
  }
}

double suboptimality(const SaddleProblem& problem, const DecisionPoint& z) {
  if (!problem.saddle || !problem.has_objective()) {
    throw std::runtime_error("suboptimality: saddle unknown");
  }
  return problem.objective(z, *problem.saddle) - problem.objective(*problem.saddle, z);
}

DecisionPoint running_average(const DecisionPoint& previous_mean, const DecisionPoint& new_iterate,
                              long n) {
  if (n < 1) throw std::invalid_argument("running_average: n must be >= 1");
  if (n == 1) return new_iterate;
  const double inv = 1.0 / static_cast<double>(n);
  return previous_mean.with_stacked(previous_mean.stacked() +
                                    inv * (new_iterate.stacked() - previous_mean.stacked()));
}

}  // namespace extragrad
