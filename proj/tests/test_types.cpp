#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "extragrad/rng.hpp"
#include "extragrad/types.hpp"

using namespace extragrad;

namespace {

// Quadratic convex-concave test problem f = theta'A theta - mu'B mu + theta'C mu
// with A, B positive definite; the stacked field is its exact gradient and the
// saddle sits at the origin.
struct QuadraticGame {
  Eigen::MatrixXd A, B, C;

  SaddleProblem problem() const {
    const Eigen::Index dt = A.rows(), dm = B.rows();
    SaddleProblem p;
    p.dim_theta = dt;
    p.dim_mu = dm;
    const Eigen::MatrixXd a = A, b = B, c = C;
    p.mean_field = [a, b, c, dt, dm](const DecisionPoint& z) {
      GradientSample g(dt + dm);
      g.head(dt) = 2.0 * a * z.theta() + c * z.mu();
      g.tail(dm) = 2.0 * b * z.mu() - c.transpose() * z.theta();
      return g;
    };
    const auto field = p.mean_field;
    p.stochastic_oracle = [field](const DecisionPoint& z, const KernelState&) { return field(z); };
    p.objective = [a, b, c](const DecisionPoint& x, const DecisionPoint& y) {
      return x.theta().dot(a * x.theta()) - y.mu().dot(b * y.mu()) + x.theta().dot(c * y.mu());
    };
    p.saddle = DecisionPoint::zero(dt, dm);
    p.validate();
    return p;
  }
};

QuadraticGame random_game(RngStream& rng, Eigen::Index dt, Eigen::Index dm) {
  auto randn = [&rng](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  const Eigen::MatrixXd ga = randn(dt, dt), gb = randn(dm, dm);
  QuadraticGame game;
  game.A = ga * ga.transpose() / static_cast<double>(dt) +
           0.2 * Eigen::MatrixXd::Identity(dt, dt);
  game.B = gb * gb.transpose() / static_cast<double>(dm) +
           0.2 * Eigen::MatrixXd::Identity(dm, dm);
  game.C = randn(dt, dm);
  return game;
}

DecisionPoint random_point(RngStream& rng, Eigen::Index dt, Eigen::Index dm, double scale) {
  Eigen::VectorXd z(dt + dm);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = scale * rng.normal();
  return DecisionPoint::from_stacked(z, dt);
}

}  // namespace

TEST_CASE("step_size evaluates eta0 * k^-a") {
  CHECK(step_size(StepSchedule(0.5, 0.75), 16) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(step_size(StepSchedule(0.5, 0.75), 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(step_size(StepSchedule(1.0, 2.0 / 3.0), 8) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(step_size(StepSchedule(0.5, 0.75), 0), std::invalid_argument);
}

TEST_CASE("schedule exponent must lie in (1/2, 1)") {
  CHECK_THROWS_AS(StepSchedule(0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(StepSchedule(0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(StepSchedule(-0.1, 0.75), std::invalid_argument);
}

TEST_CASE("step sizes decrease strictly; sums behave like the theory needs") {
  const StepSchedule s(0.1, 0.75);
  double prev = step_size(s, 1);
  double sum = prev, sumsq = prev * prev;
  double sum_1e5 = 0.0, sumsq_1e5 = 0.0;
  for (long k = 2; k <= 1000000; ++k) {
    const double eta = step_size(s, k);
    REQUIRE(eta < prev);
    prev = eta;
    sum += eta;
    sumsq += eta * eta;
    if (k == 100000) {
      sum_1e5 = sum;
      sumsq_1e5 = sumsq;
    }
  }
  CHECK(sum > 1.5 * sum_1e5);       // partial sums keep growing markedly
  CHECK(sumsq - sumsq_1e5 < 1e-4);  // square-sum tail is negligible
}

TEST_CASE("decision point split and concatenation is the identity") {
  RngStream rng = RngStream::derive(5, 0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index dt = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
    const Eigen::Index dm = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
    const DecisionPoint z = random_point(rng, dt, dm, 2.0);
    const DecisionPoint rebuilt(Eigen::VectorXd(z.theta()), Eigen::VectorXd(z.mu()));
    CHECK(rebuilt.stacked() == z.stacked());
    CHECK(rebuilt.dim_theta() == dt);
    CHECK(rebuilt.dim_mu() == dm);
  }
  CHECK_THROWS_AS(DecisionPoint(Eigen::VectorXd(), Eigen::VectorXd::Ones(1)),
                  std::invalid_argument);
}

TEST_CASE("running average reproduces batch means") {
  const auto scalar = [](double v) {
    return DecisionPoint(Eigen::VectorXd::Constant(1, v), Eigen::VectorXd::Constant(1, 0.0));
  };
  DecisionPoint mean = scalar(0.0);
  mean = running_average(mean, scalar(1), 1);
  mean = running_average(mean, scalar(2), 2);
  mean = running_average(mean, scalar(3), 3);
  CHECK(mean.theta()[0] == doctest::Approx(2.0).epsilon(1e-15));

  // first-element identity, arbitrary previous mean
  CHECK(running_average(scalar(999), scalar(4), 1).theta()[0] == 4.0);

  // constant stream stays put
  DecisionPoint c = scalar(0.0);
  for (long n = 1; n <= 100; ++n) c = running_average(c, scalar(3.25), n);
  CHECK(c.theta()[0] == doctest::Approx(3.25).epsilon(1e-15));

  // long random stream matches the direct batch mean to 1e-12 relative
  RngStream rng = RngStream::derive(11, 0, 0);
  const long len = 100000;
  DecisionPoint streaming = DecisionPoint::zero(2, 1);
  Eigen::VectorXd batch = Eigen::VectorXd::Zero(3);
  for (long n = 1; n <= len; ++n) {
    const DecisionPoint z = random_point(rng, 2, 1, 1.0);
    streaming = running_average(streaming, z, n);
    batch += z.stacked();
  }
  batch /= static_cast<double>(len);
  CHECK((streaming.stacked() - batch).norm() <= 1e-12 * batch.norm());

  CHECK_THROWS_AS(running_average(scalar(0), scalar(1), 0), std::invalid_argument);
}

TEST_CASE("suboptimality on the scalar quadratic f = theta^2 - mu^2") {
  QuadraticGame game;
  game.A = Eigen::MatrixXd::Identity(1, 1);
  game.B = Eigen::MatrixXd::Identity(1, 1);
  game.C = Eigen::MatrixXd::Zero(1, 1);
  const SaddleProblem p = game.problem();
  const auto zpt = [](double t, double m) {
    return DecisionPoint(Eigen::VectorXd::Constant(1, t), Eigen::VectorXd::Constant(1, m));
  };
  CHECK(suboptimality(p, zpt(0, 0)) == doctest::Approx(0.0));
  CHECK(suboptimality(p, zpt(1, 1)) == doctest::Approx(2.0));
  CHECK(suboptimality(p, zpt(0.5, 0)) == doctest::Approx(0.25));

  SaddleProblem no_saddle = p;
  no_saddle.saddle.reset();
  CHECK_THROWS_WITH_AS(suboptimality(no_saddle, zpt(1, 1)), "suboptimality: saddle unknown",
                       std::runtime_error);
}

TEST_CASE("declared saddle must be a zero of the mean field") {
  QuadraticGame game;
  game.A = Eigen::MatrixXd::Identity(1, 1);
  game.B = Eigen::MatrixXd::Identity(1, 1);
  game.C = Eigen::MatrixXd::Zero(1, 1);
  SaddleProblem p = game.problem();
  p.saddle = DecisionPoint(Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Zero(1));
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("field-suboptimality inequality holds on random quadratic games") {
  RngStream rng = RngStream::derive(17, 0, 0);
  int checked = 0;
  for (int g = 0; g < 10; ++g) {
    const QuadraticGame game = random_game(rng, 2 + g % 3, 1 + g % 4);
    const SaddleProblem p = game.problem();
    for (int t = 0; t < 100; ++t) {
      const DecisionPoint z = random_point(rng, p.dim_theta, p.dim_mu, 1.5);
      const double gap = suboptimality(p, z);
      const double pairing = p.mean_field(z).dot(z.stacked() - p.saddle->stacked());
      REQUIRE(gap >= -1e-12);
      REQUIRE(pairing >= gap - 1e-10);
      ++checked;
    }
  }
  CHECK(checked == 1000);
}
