#include <doctest.h>

#include <cmath>
#include <random>

#include "logitunc/calibration.hpp"
#include "logitunc/error.hpp"
#include "oracles.hpp"

using namespace logitunc;

namespace {

GmmModel normal_1d(double mu, double var) {
  return GmmModel({GaussianComponent::from_covariance(1.0, Vector::Constant(1, mu), Matrix::Constant(1, 1, var))});
}

}  // namespace

TEST_CASE("empirical quantile") {
  const std::vector<double> five{5, 1, 4, 2, 3};
  CHECK(empirical_quantile(five, 0.5) == 3.0);
  CHECK(empirical_quantile(five, 0.0) == 1.0);
  CHECK(empirical_quantile(five, 1.0) == 5.0);
  const std::vector<double> four{1, 2, 3, 4};
  CHECK(empirical_quantile(four, 0.5) == 2.5);
  CHECK(empirical_quantile(std::vector<double>{7.0}, 0.3) == 7.0);
  CHECK_THROWS_WITH_AS(empirical_quantile(std::vector<double>{}, 0.5), doctest::Contains("EmptyInput"), Error);
  CHECK_THROWS_AS(empirical_quantile(five, 1.5), Error);
}

TEST_CASE("logistic worked values") {
  const Hyperparams hp;
  const auto p = fit_logistic(2.0, 1.0, hp);
  CHECK(std::abs(p.c2 - 2.0) < 1e-12);
  CHECK(std::abs(p.c1 - std::log(4.0)) < 1e-12);
  CHECK(std::abs(logistic(p.c1, p.c2, 1.0) - 0.2) < 1e-12);
  CHECK(logistic(p.c1, p.c2, p.c2) == 0.5);
  CHECK(logistic(std::log(4.0), 2.0, 1.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(logistic(1.0, 0.0, 1e6) == 1.0);

  CHECK_THROWS_WITH_AS(fit_logistic(1.0, 1.0, hp), doctest::Contains("DegenerateScores"), Error);
  Hyperparams same = hp;
  same.u2 = same.u1;
  CHECK_THROWS_WITH_AS(fit_logistic(2.0, 1.0, same), doctest::Contains("DegenerateHyperparams"), Error);
}

TEST_CASE("logistic fit hits both anchors on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::uniform_real_distribution<double> s(-20.0, 20.0);
  for (int t = 0; t < 2000; ++t) {
    Hyperparams hp;
    hp.u1 = u(rng);
    hp.u2 = u(rng);
    if (hp.u2 >= hp.u1) std::swap(hp.u1, hp.u2);
    if (hp.u1 - hp.u2 < 1e-3) continue;
    double s1 = s(rng), s2 = s(rng);
    if (s2 >= s1) std::swap(s1, s2);
    if (s1 - s2 < 1e-3) continue;
    const auto p = fit_logistic(s1, s2, hp);
    CHECK(p.c1 > 0.0);
    CHECK(std::abs(logistic(p.c1, p.c2, s1) - hp.u1) < 1e-12);
    CHECK(std::abs(logistic(p.c1, p.c2, s2) - hp.u2) < 1e-12);
  }
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  CHECK_NOTHROW(hp.validate());
  hp.u2 = 0.6;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = Hyperparams{};
  hp.q1 = 0.5;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = Hyperparams{};
  hp.q1 = 80;
  CHECK_THROWS_AS(hp.validate(), Error);
}

TEST_CASE("mode estimate") {
  const auto single = normal_1d(1.5, 2.0);
  PointMatrix far(1, 1);
  far << 40.0;
  CHECK(max_log_density_estimate(single, far) == log_density(single, Vector::Constant(1, 1.5)));

  const GmmModel twin({GaussianComponent::from_covariance(0.5, Vector::Constant(1, -5.0), Matrix::Identity(1, 1)),
                       GaussianComponent::from_covariance(0.5, Vector::Constant(1, 5.0), Matrix::Identity(1, 1))});
  double grid = -1e300;
  for (int i = 0; i <= 2000000; ++i) {
    const double x = -10.0 + 20.0 * i / 2000000.0;
    grid = std::max(grid, log_density(twin, Vector::Constant(1, x)));
  }
  PointMatrix some(2, 1);
  some << 0.0, 3.0;
  CHECK(std::abs(max_log_density_estimate(twin, some) - grid) < 1e-6);

  CHECK_THROWS_WITH_AS(max_log_density_estimate(twin, PointMatrix(0, 1)), doctest::Contains("EmptyCandidateSet"),
                       Error);
}

TEST_CASE("score") {
  CHECK(score(-1.0, -1.0) == 0.0);
  CHECK(score(-1.0, -1.0 - std::log(2.0)) == doctest::Approx(0.693147).epsilon(1e-6));

  const auto g = GaussianComponent::from_covariance(1.0, Vector::Zero(2), Matrix::Identity(2, 2));
  const GmmModel m({g});
  PointMatrix cand(1, 2);
  cand << 0.0, 0.0;
  const double mx = max_log_density_estimate(m, cand);
  Vector x(2);
  x << 2.0, 0.0;
  CHECK(mahalanobis(g, x) == 2.0);
  CHECK(std::abs(score(mx, log_density(m, x)) - 2.0) < 1e-12);
}

TEST_CASE("calibrate_class on a Gaussian sample") {
  const auto model = normal_1d(0.0, 1.0);
  const auto pts = sample(model, 1000, 5);
  const Hyperparams hp;
  const auto cal = calibrate_class(model, pts, hp);
  CHECK(cal.s_q2 < cal.s_q1);
  CHECK(cal.c1 > 0.0);
  CHECK(std::abs(logistic(cal.c1, cal.c2, cal.s_q1) - hp.u1) < 1e-12);
  CHECK(std::abs(logistic(cal.c1, cal.c2, cal.s_q2) - hp.u2) < 1e-12);

  std::size_t below = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double s = score(cal.max_log_density, log_density(model, pts.row(i).transpose()));
    CHECK(s >= 0.0);
    if (s < cal.s_q1) ++below;
  }
  CHECK(std::abs(static_cast<double>(below) / 1000.0 - hp.q1) <= 0.02);

  PointMatrix one(1, 1);
  one << 0.3;
  CHECK_THROWS_WITH_AS(calibrate_class(model, one, hp), doctest::Contains("DegenerateScores"), Error);
}
