#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "extragrad/diagnostics.hpp"
#include "extragrad/models.hpp"

using namespace extragrad;

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-10));
  CHECK(normal_cdf(-1.0) == doctest::Approx(1.0 - normal_cdf(1.0)).epsilon(1e-15));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
}

TEST_CASE("ks statistic: jump-point evaluation") {
  CHECK(ks_statistic({0.0}, 1.0) == 0.5);

  // samples placed exactly on the normal quantiles
  const int m = 1000;
  std::vector<double> samples(m);
  for (int i = 0; i < m; ++i) samples[i] = normal_quantile((i + 0.5) / m);
  CHECK(ks_statistic(samples, 1.0) <= 0.5 / m + 1e-6);

  // scale equivariance, bit for bit (factor of two is exact in floating point)
  std::vector<double> scaled(samples);
  for (double& x : scaled) x *= 2.0;
  CHECK(ks_statistic(scaled, 2.0) == ks_statistic(samples, 1.0));

  // order invariance
  std::vector<double> shuffled(samples);
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(7));
  CHECK(ks_statistic(shuffled, 1.0) == ks_statistic(samples, 1.0));

  CHECK_THROWS_AS(ks_statistic({}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ks_statistic({0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("ks statistic: correctly-scaled normal samples pass at the 1% level") {
  const double crit = ks_critical_1pct(2000);
  CHECK(crit == doctest::Approx(0.0364).epsilon(0.01));
  RngStream rng = RngStream::derive(2024, 0, 0);
  int passes = 0;
  const int repeats = 40;
  for (int rep = 0; rep < repeats; ++rep) {
    std::vector<double> samples(2000);
    for (double& x : samples) x = 2.0 * rng.normal();  // N(0, 4)
    if (ks_statistic(samples, 2.0) < crit) ++passes;
  }
  CHECK(passes >= 38);  // >= 95% of seeded repeats
}

TEST_CASE("finite-difference jacobian: exact on linear fields") {
  LinearFieldSpec spec;
  spec.Q = Eigen::MatrixXd(2, 2);
  spec.Q << 2, 0, 0, 2;
  spec.noise_cov = Eigen::MatrixXd::Identity(2, 2);
  const SaddleProblem p = make_linear_problem(spec);
  const Eigen::MatrixXd jac = jacobian_fd(p.mean_field, DecisionPoint::zero(1, 1), 1e-5);
  CHECK((jac - spec.Q).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("finite-difference jacobian: game presets at the equilibrium") {
  const SaddleProblem mart = make_ev_problem(EVGameSpec{ev_chain_params(false)});
  const Eigen::MatrixXd j1 = jacobian_fd(mart.mean_field, *mart.saddle);
  CHECK((j1 - 2.0 * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);

  const SaddleProblem markov = make_ev_problem(EVGameSpec{ev_chain_params(true)});
  const Eigen::MatrixXd j2 = jacobian_fd(markov.mean_field, *markov.saddle);
  // analytic cross-check: 2I - coupling/(1 - rho)
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  expected.topLeftCorner(3, 3) = 2.5 * Eigen::MatrixXd::Identity(3, 3);
  expected.bottomRightCorner(3, 3) = 2.5 * Eigen::MatrixXd::Identity(3, 3);
  expected.topRightCorner(3, 3) = -0.5 * Eigen::MatrixXd::Identity(3, 3);
  expected.bottomLeftCorner(3, 3) = -0.5 * Eigen::MatrixXd::Identity(3, 3);
  CHECK((j2 - expected).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("finite-difference jacobian: second-order error decay") {
  const auto field = [](const DecisionPoint& z) {
    const double t = z.theta()[0], m = z.mu()[0];
    GradientSample g(2);
    g[0] = std::sin(2.0 * t) + m * m * m;
    g[1] = std::cos(t) - std::exp(m);
    return g;
  };
  const DecisionPoint z(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 0.4));
  Eigen::MatrixXd exact(2, 2);
  exact << 2.0 * std::cos(0.6), 3.0 * 0.4 * 0.4, -std::sin(0.3), -std::exp(0.4);
  const double e1 = (jacobian_fd(field, z, 1e-3) - exact).norm();
  const double e2 = (jacobian_fd(field, z, 5e-4) - exact).norm();
  CHECK(e1 / e2 > 3.5);
  CHECK(e1 / e2 < 4.5);
}

TEST_CASE("i.i.d. gradient-noise covariance") {
  const ProblemPreset linear = make_preset("linear");
  const long n = 100000;
  const Eigen::MatrixXd cov = gradient_noise_covariance_iid(
      linear.problem, *linear.problem.saddle,
      linear.make_kernel(*linear.problem.saddle, RngStream::derive(5, 2, 0)), n);
  CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        3.0 * std::sqrt(2.0 / n));

  const ProblemPreset mart = make_preset("martingale-ev");
  const Eigen::MatrixXd cov6 = gradient_noise_covariance_iid(
      mart.problem, *mart.problem.saddle,
      mart.make_kernel(*mart.problem.saddle, RngStream::derive(5, 2, 1)), n);
  CHECK((cov6 - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 0.02);

  // deterministic oracle: zero covariance, exactly
  SaddleProblem det;
  det.dim_theta = 1;
  det.dim_mu = 1;
  det.mean_field = [](const DecisionPoint& z) -> GradientSample { return z.stacked(); };
  const auto field = det.mean_field;
  det.stochastic_oracle = [field](const DecisionPoint& z, const KernelState&) { return field(z); };
  det.saddle = DecisionPoint::zero(1, 1);
  NoiseKernel null_kernel{[](const KernelState& s, const DecisionPoint&) { return s; },
                          KernelState{Eigen::VectorXd::Zero(1), RngStream()}};
  CHECK(gradient_noise_covariance_iid(det, *det.saddle, null_kernel, 1000).norm() == 0.0);
  CHECK_THROWS_AS(gradient_noise_covariance_iid(det, *det.saddle, null_kernel, 999),
                  std::invalid_argument);
}

TEST_CASE("batch means: chain preset reaches the AR(1) long-run covariance") {
  const ProblemPreset markov = make_preset("markov-ev");
  const DecisionPoint z_star = *markov.problem.saddle;
  const Eigen::MatrixXd sigma = longrun_covariance_batch_means(
      markov.problem, z_star, markov.make_kernel(z_star, RngStream::derive(9, 2, 0)), 4000000,
      4000);
  const Eigen::MatrixXd expected = (1.0 / 0.36) * Eigen::MatrixXd::Identity(6, 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(sigma(i, i) == doctest::Approx(expected(i, i)).epsilon(0.07));
  }
  CHECK((sigma - expected).cwiseAbs().maxCoeff() < 0.07 * expected(0, 0));
}

TEST_CASE("batch means agrees with the i.i.d. estimator on independent streams") {
  const ProblemPreset mart = make_preset("martingale-ev");
  const DecisionPoint z_star = *mart.problem.saddle;
  const long n = 2000000;
  const int batches = 2000;
  const Eigen::MatrixXd lr = longrun_covariance_batch_means(
      mart.problem, z_star, mart.make_kernel(z_star, RngStream::derive(9, 2, 1)), n, batches);
  const long n_iid = 200000;
  const Eigen::MatrixXd iid = gradient_noise_covariance_iid(
      mart.problem, z_star, mart.make_kernel(z_star, RngStream::derive(9, 2, 2)), n_iid);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double se_lr = std::sqrt((lr(i, i) * lr(j, j) + lr(i, j) * lr(i, j)) / (batches - 1));
      const double se_iid =
          std::sqrt((iid(i, i) * iid(j, j) + iid(i, j) * iid(i, j)) / (n_iid - 1));
      const double combined = std::sqrt(se_lr * se_lr + se_iid * se_iid);
      REQUIRE(std::abs(lr(i, j) - iid(i, j)) < 3.0 * combined);
    }
  }
}

TEST_CASE("batch means rejects batches shorter than the mixing scale") {
  const ProblemPreset markov = make_preset("markov-ev");
  const DecisionPoint z_star = *markov.problem.saddle;
  CHECK_THROWS_WITH_AS(
      longrun_covariance_batch_means(markov.problem, z_star,
                                     markov.make_kernel(z_star, RngStream::derive(9, 2, 3)), 2000,
                                     2000),
      "longrun_covariance_batch_means: insufficient batch length", std::runtime_error);
  CHECK_THROWS_AS(
      longrun_covariance_batch_means(markov.problem, z_star,
                                     markov.make_kernel(z_star, RngStream::derive(9, 2, 3)), 1001,
                                     10),
      std::invalid_argument);
}

TEST_CASE("asymptotic covariance assembly") {
  const Eigen::MatrixXd eye2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK((asymptotic_covariance(2.0 * eye2, eye2) - 0.25 * eye2).norm() < 1e-14);

  Eigen::MatrixXd sigma(2, 2);
  sigma << 2, 0.5, 0.5, 1;
  CHECK((asymptotic_covariance(eye2, sigma) - sigma).norm() < 1e-14);

  // chain preset numbers: 1'V1 = (1/0.36) |Qinv 1|^2 = 25/6
  Eigen::MatrixXd qstar = Eigen::MatrixXd::Zero(6, 6);
  qstar.topLeftCorner(3, 3) = 2.5 * Eigen::MatrixXd::Identity(3, 3);
  qstar.bottomRightCorner(3, 3) = 2.5 * Eigen::MatrixXd::Identity(3, 3);
  qstar.topRightCorner(3, 3) = -0.5 * Eigen::MatrixXd::Identity(3, 3);
  qstar.bottomLeftCorner(3, 3) = -0.5 * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd v =
      asymptotic_covariance(qstar, (1.0 / 0.36) * Eigen::MatrixXd::Identity(6, 6));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(6);
  CHECK(ones.dot(v * ones) == doctest::Approx(25.0 / 6.0).epsilon(1e-12));
  CHECK(ones.dot(v * ones) == doctest::Approx(4.17).epsilon(0.002));

  CHECK_THROWS_AS(asymptotic_covariance(Eigen::MatrixXd::Zero(2, 2), eye2),
                  std::invalid_argument);
}

TEST_CASE("asymptotic covariance stays symmetric PSD over random instances") {
  RngStream rng = RngStream::derive(77, 0, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + trial % 4;
    Eigen::MatrixXd g(d, d), q(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        g(i, j) = rng.normal();
        q(i, j) = rng.normal();
      }
    }
    const Eigen::MatrixXd sigma = g * g.transpose();
    q += static_cast<double>(2 * d) * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd v = asymptotic_covariance(q, sigma);
    REQUIRE((v - v.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("histogram and qq tables") {
  const HistogramQQ h = histogram_and_qq({-1.0, 1.0}, 2, 1.0);
  REQUIRE(h.bin_edges.size() == 3);
  CHECK(h.bin_edges[0] == -1.0);
  CHECK(h.bin_edges[2] == 1.0);
  CHECK(h.densities[0] == doctest::Approx(0.5));
  CHECK(h.densities[1] == doctest::Approx(0.5));

  CHECK_THROWS_AS(histogram_and_qq({2.0, 2.0, 2.0}, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(histogram_and_qq({}, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(histogram_and_qq({-1.0, 1.0}, 1, 1.0), std::invalid_argument);

  // QQ of exact scaled quantiles lies on y = sigma * x
  const double sigma = 1.7;
  const int m = 500;
  std::vector<double> samples(m);
  for (int i = 0; i < m; ++i) samples[i] = sigma * normal_quantile((i + 0.5) / m);
  const HistogramQQ hq = histogram_and_qq(samples, 10, sigma);
  for (const auto& [q, x] : hq.qq) CHECK(x == doctest::Approx(sigma * q).epsilon(1e-6));

  // densities integrate to one
  double mass = 0.0;
  for (std::size_t i = 0; i < hq.densities.size(); ++i) {
    mass += hq.densities[i] * (hq.bin_edges[i + 1] - hq.bin_edges[i]);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("covariance report: diagnostics against a known law") {
  RngStream rng = RngStream::derive(31, 0, 0);
  const int m = 4000;
  Eigen::MatrixXd samples(m, 2);
  for (int i = 0; i < m; ++i) {
    samples(i, 0) = 2.0 * rng.normal();
    samples(i, 1) = rng.normal();
  }
  Eigen::MatrixXd theory(2, 2);
  theory << 4, 0, 0, 1;
  const CovarianceReport report = make_covariance_report(samples, theory);
  CHECK(report.frobenius_rel_error < 0.1);
  CHECK((report.empirical - report.empirical.transpose()).norm() < 1e-10);
  REQUIRE(report.projection_variances.size() == 3);
  CHECK(report.projection_variances[0].direction == "ones");
  CHECK(report.projection_variances[0].theoretical == doctest::Approx(5.0));
  CHECK(report.projection_variances[0].empirical == doctest::Approx(5.0).epsilon(0.15));
}
