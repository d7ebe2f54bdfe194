#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "extragrad/kernels.hpp"
#include "extragrad/types.hpp"

namespace extragrad {

/// Standard normal CDF, exact to machine precision via erfc.
double normal_cdf(double x);

/// Inverse standard normal CDF (rational approximation plus one Halley
/// refinement; absolute error far below 1e-9 on (0, 1)).
double normal_quantile(double p);

/// Two-sided Kolmogorov-Smirnov statistic of the samples against N(0, sigma^2):
/// sup_x |F-hat(x) - Phi(x / sigma)| evaluated at the empirical jump points.
double ks_statistic(const std::vector<double>& samples, double sigma);

/// 1% critical value of the Kolmogorov distribution for m samples.
inline double ks_critical_1pct(std::size_t m) {
  return 1.63 / std::sqrt(static_cast<double>(m));
}

/// Central-difference Jacobian of the mean field, column j =
/// (H(z + h e_j) - H(z - h e_j)) / (2h).
Eigen::MatrixXd jacobian_fd(const std::function<GradientSample(const DecisionPoint&)>& mean_field,
                            const DecisionPoint& z, double h);

/// Default step h = 1e-5 * (1 + |z|_inf).
Eigen::MatrixXd jacobian_fd(const std::function<GradientSample(const DecisionPoint&)>& mean_field,
                            const DecisionPoint& z);

/// Sample covariance of H(z*, w_i) over n_samples independent draws from the
/// kernel (mean removed). Requires n_samples >= 1000.
Eigen::MatrixXd gradient_noise_covariance_iid(const SaddleProblem& problem,
                                              const DecisionPoint& z_star, NoiseKernel kernel,
                                              long n_samples);

/// Batch-means estimator of the long-run covariance of H(z*, w_k) along the
/// chain frozen at z*: splits the stream into n_batches contiguous batches and
/// returns batch_length * Cov(batch means). Throws "insufficient batch length"
/// when the lag-1 autocorrelation of the batch means exceeds 0.1.
Eigen::MatrixXd longrun_covariance_batch_means(const SaddleProblem& problem,
                                               const DecisionPoint& z_star, NoiseKernel kernel,
                                               long n_samples, int n_batches);

/// Q*^-1 Sigma Q*^-T, symmetrized. Throws if the smallest singular value of
/// Qstar is below 1e-10.
Eigen::MatrixXd asymptotic_covariance(const Eigen::MatrixXd& Qstar, const Eigen::MatrixXd& Sigma);

struct ProjectionComparison {
  std::string direction;
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// Empirical vs. theoretical covariance of sqrt(n) (z-bar - z*) across
/// replications, with per-direction variance comparisons.
struct CovarianceReport {
  Eigen::MatrixXd empirical;
  Eigen::MatrixXd theoretical;
  double frobenius_rel_error = 0.0;
  std::vector<ProjectionComparison> projection_variances;
};

/// rows of `samples` are replication vectors sqrt(n) (z-bar - z*).
CovarianceReport make_covariance_report(const Eigen::MatrixXd& samples,
                                        const Eigen::MatrixXd& theoretical);

struct HistogramQQ {
  std::vector<double> bin_edges;          // n_bins + 1 edges spanning [min, max]
  std::vector<double> densities;          // normalized to integrate to 1
  std::vector<double> reference_density;  // N(0, sigma^2) density at bin centers
  std::vector<std::pair<double, double>> qq;  // (standard normal quantile, order statistic)
};

HistogramQQ histogram_and_qq(const std::vector<double>& samples, int n_bins, double sigma);

}  // namespace extragrad
