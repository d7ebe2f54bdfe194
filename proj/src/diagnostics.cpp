#include "extragrad/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace extragrad {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation to the inverse normal CDF (~1e-9 absolute).
double inverse_normal_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie strictly inside (0, 1)");
  }
  double x = inverse_normal_approx(p);
  // One Halley step against the exact CDF.
  const double err = normal_cdf(x) - p;
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 0.0) {
    const double u = err / pdf;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double ks_statistic(const std::vector<double>& samples, double sigma) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample set");
  if (!(sigma > 0.0)) throw std::invalid_argument("ks_statistic: sigma must be positive");
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i] / sigma);
    const double above = (static_cast<double>(i) + 1.0) / m - cdf;
    const double below = cdf - static_cast<double>(i) / m;
    sup = std::max(sup, std::max(above, below));
  }
  return sup;
}

Eigen::MatrixXd jacobian_fd(const std::function<GradientSample(const DecisionPoint&)>& mean_field,
                            const DecisionPoint& z, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("jacobian_fd: h must be positive");
  const Eigen::Index d = z.dim();
  Eigen::MatrixXd jac(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd plus = z.stacked();
    Eigen::VectorXd minus = z.stacked();
    plus[j] += h;
    minus[j] -= h;
    const GradientSample fp = mean_field(z.with_stacked(plus));
    const GradientSample fm = mean_field(z.with_stacked(minus));
    if (!fp.allFinite() || !fm.allFinite()) {
      throw std::runtime_error("jacobian_fd: non-finite field evaluation");
    }
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd jacobian_fd(const std::function<GradientSample(const DecisionPoint&)>& mean_field,
                            const DecisionPoint& z) {
  const double h = 1e-5 * (1.0 + z.stacked().cwiseAbs().maxCoeff());
  return jacobian_fd(mean_field, z, h);
}

Eigen::MatrixXd gradient_noise_covariance_iid(const SaddleProblem& problem,
                                              const DecisionPoint& z_star, NoiseKernel kernel,
                                              long n_samples) {
  if (n_samples < 1000) {
    throw std::invalid_argument("gradient_noise_covariance_iid: need n_samples >= 1000");
  }
  const Eigen::Index d = z_star.dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (long i = 0; i < n_samples; ++i) {
    kernel.state = kernel.advance(kernel.state, z_star);
    const GradientSample g = problem.stochastic_oracle(z_star, kernel.state);
    if (!g.allFinite()) throw std::runtime_error("gradient_noise_covariance_iid: non-finite sample");
    mean += g;
    second.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  const double n = static_cast<double>(n_samples);
  mean /= n;
  Eigen::MatrixXd cov = Eigen::MatrixXd(second.selfadjointView<Eigen::Lower>()) / (n - 1.0) -
                        (n / (n - 1.0)) * mean * mean.transpose();
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd longrun_covariance_batch_means(const SaddleProblem& problem,
                                               const DecisionPoint& z_star, NoiseKernel kernel,
                                               long n_samples, int n_batches) {
  if (n_batches < 2) throw std::invalid_argument("longrun_covariance_batch_means: need >= 2 batches");
  if (n_samples % n_batches != 0) {
    throw std::invalid_argument("longrun_covariance_batch_means: n_samples must divide into batches");
  }
  const long batch_length = n_samples / n_batches;
  const Eigen::Index d = z_star.dim();
  Eigen::MatrixXd means(n_batches, d);
  for (int b = 0; b < n_batches; ++b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    for (long i = 0; i < batch_length; ++i) {
      kernel.state = kernel.advance(kernel.state, z_star);
      const GradientSample g = problem.stochastic_oracle(z_star, kernel.state);
      if (!g.allFinite()) {
        throw std::runtime_error("longrun_covariance_batch_means: non-finite sample");
      }
      acc += g;
    }
    means.row(b) = acc.transpose() / static_cast<double>(batch_length);
  }
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::MatrixXd centered = means.rowwise() - grand;

  // Correlated batch means indicate batches shorter than the mixing scale.
  double num = 0.0, den = centered.squaredNorm();
  for (int b = 0; b + 1 < n_batches; ++b) num += centered.row(b).dot(centered.row(b + 1));
  if (den > 0.0 && num / den > 0.1) {
    throw std::runtime_error("longrun_covariance_batch_means: insufficient batch length");
  }

  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n_batches - 1);
  cov *= static_cast<double>(batch_length);
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd asymptotic_covariance(const Eigen::MatrixXd& Qstar, const Eigen::MatrixXd& Sigma) {
  if (Qstar.rows() != Qstar.cols() || Sigma.rows() != Sigma.cols() ||
      Qstar.rows() != Sigma.rows()) {
    throw std::invalid_argument("asymptotic_covariance: dimension mismatch");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qstar, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() <= 1e-10) {
    throw std::invalid_argument("asymptotic_covariance: Qstar is singular");
  }
  const Eigen::MatrixXd inv = Qstar.inverse();
  const Eigen::MatrixXd v = inv * Sigma * inv.transpose();
  return 0.5 * (v + v.transpose());
}

CovarianceReport make_covariance_report(const Eigen::MatrixXd& samples,
                                        const Eigen::MatrixXd& theoretical) {
  if (samples.rows() < 2) throw std::invalid_argument("make_covariance_report: need >= 2 rows");
  CovarianceReport report;
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  report.empirical =
      (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  report.empirical = 0.5 * (report.empirical + report.empirical.transpose()).eval();
  report.theoretical = theoretical;
  report.frobenius_rel_error = (report.empirical - theoretical).norm() / theoretical.norm();

  const Eigen::Index d = theoretical.rows();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d);
  report.projection_variances.push_back(
      {"ones", ones.dot(report.empirical * ones), ones.dot(theoretical * ones)});
  for (Eigen::Index i = 0; i < d; ++i) {
    report.projection_variances.push_back(
        {"e" + std::to_string(i + 1), report.empirical(i, i), theoretical(i, i)});
  }
  return report;
}

HistogramQQ histogram_and_qq(const std::vector<double>& samples, int n_bins, double sigma) {
  if (samples.empty()) throw std::invalid_argument("histogram_and_qq: empty sample set");
  if (n_bins < 2) throw std::invalid_argument("histogram_and_qq: need at least 2 bins");
  if (!(sigma > 0.0)) throw std::invalid_argument("histogram_and_qq: sigma must be positive");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    throw std::invalid_argument("histogram_and_qq: degenerate sample range (constant samples)");
  }
  HistogramQQ out;
  const double width = (hi - lo) / n_bins;
  out.bin_edges.resize(n_bins + 1);
  for (int i = 0; i <= n_bins; ++i) out.bin_edges[i] = lo + width * i;
  out.bin_edges.back() = hi;

  std::vector<long> counts(n_bins, 0);
  for (double x : samples) {
    int bin = static_cast<int>((x - lo) / width);
    bin = std::clamp(bin, 0, n_bins - 1);
    ++counts[bin];
  }
  const double m = static_cast<double>(samples.size());
  out.densities.resize(n_bins);
  out.reference_density.resize(n_bins);
  for (int i = 0; i < n_bins; ++i) {
    out.densities[i] = static_cast<double>(counts[i]) / (m * width);
    const double center = lo + width * (i + 0.5);
    out.reference_density[i] =
        std::exp(-0.5 * center * center / (sigma * sigma)) / (sigma * std::sqrt(2.0 * M_PI));
  }

  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  out.qq.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / m;
    out.qq.emplace_back(normal_quantile(p), sorted[i]);
  }
  return out;
}

}  // namespace extragrad
