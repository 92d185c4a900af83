#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "logitunc/error.hpp"
#include "logitunc/gmm.hpp"
#include "oracles.hpp"

using namespace logitunc;

namespace {

GaussianComponent comp(double w, Vector mean, Matrix cov) {
  return GaussianComponent::from_covariance(w, std::move(mean), cov);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

PointMatrix column(const std::vector<double>& xs) {
  PointMatrix m(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = xs[i];
  return m;
}

std::vector<double> as_vector(const PointMatrix& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, 0));
  return out;
}

}  // namespace

TEST_CASE("log_density of a standard normal") {
  const GmmModel one({comp(1.0, vec({0.0}), Matrix::Identity(1, 1))});
  CHECK(log_density(one, vec({0.0})) == doctest::Approx(-0.918939).epsilon(1e-6));

  const GmmModel two({comp(0.5, vec({0.0}), Matrix::Identity(1, 1)), comp(0.5, vec({0.0}), Matrix::Identity(1, 1))});
  for (double x = -6.0; x <= 6.0; x += 0.25) {
    CHECK(std::abs(log_density(two, vec({x})) - log_density(one, vec({x}))) < 1e-12);
  }

  for (int d = 1; d <= 6; ++d) {
    const GmmModel m({comp(1.0, Vector::Zero(d), Matrix::Identity(d, d))});
    CHECK(log_density(m, Vector::Zero(d)) == doctest::Approx(-0.5 * d * std::log(2.0 * std::numbers::pi)));
  }
}

TEST_CASE("identical components collapse to one") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 4;
    Matrix a = Matrix::Random(d, d);
    Matrix cov = a * a.transpose() + Matrix::Identity(d, d);
    Vector mu = Vector::Random(d);
    const int c = 2 + trial % 4;
    std::vector<GaussianComponent> comps;
    for (int j = 0; j < c; ++j) comps.push_back(comp(1.0 / c, mu, cov));
    double wsum = 0.0;
    for (const auto& cc : comps) wsum += cc.weight;
    comps.back().weight += 1.0 - wsum;
    const GmmModel mix(comps);
    const GmmModel single({comp(1.0, mu, cov)});
    for (int p = 0; p < 25; ++p) {
      Vector x(d);
      for (int k = 0; k < d; ++k) x[k] = 3.0 * z(rng);
      CHECK(std::abs(log_density(mix, x) - log_density(single, x)) < 1e-12);
    }
  }
}

TEST_CASE("mahalanobis examples") {
  const auto iso = comp(1.0, Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(mahalanobis(iso, vec({3.0, 4.0})) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(mahalanobis(iso, Vector::Zero(2)) == 0.0);
  const auto wide = comp(1.0, vec({0.0}), Matrix::Constant(1, 1, 4.0));
  CHECK(mahalanobis(wide, vec({4.0})) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("component validation") {
  CHECK_THROWS_AS(comp(1.0, vec({0.0, 0.0}), Matrix::Zero(2, 2)), Error);
  GaussianComponent bad{1.0, vec({0.0}), Matrix::Constant(1, 1, -1.0)};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(GmmModel({comp(0.6, vec({0.0}), Matrix::Identity(1, 1))}), Error);
  CHECK_THROWS_AS(GmmModel({comp(0.5, vec({0.0}), Matrix::Identity(1, 1)),
                            comp(0.5, vec({0.0, 1.0}), Matrix::Identity(2, 2))}),
                  Error);
}

TEST_CASE("c = 1 fit is the closed-form MLE plus regularizer") {
  FitConfig cfg;
  const auto data = oracle::gaussian_clusters({vec({1.0, -2.0, 0.5})}, 1.7, 257, 5);
  const auto fit = em_fit(data, 1, cfg);
  const auto ref = oracle::closed_form_gaussian(data, cfg.covariance_regularizer);
  const auto& g = fit.components().front();
  CHECK(g.weight == 1.0);
  CHECK((g.mean.array() == ref.mean.array()).all());
  const Matrix ref_l = Eigen::LLT<Matrix>(ref.cov).matrixL();
  CHECK((g.cholesky.array() == ref_l.array()).all());

  PointMatrix same(10, 2);
  same.rowwise() = vec({3.0, -1.0}).transpose();
  const auto flat = em_fit(same, 1, cfg);
  CHECK((flat.components()[0].mean.array() == vec({3.0, -1.0}).array()).all());
  const Matrix expected = cfg.covariance_regularizer * Matrix::Identity(2, 2);
  CHECK((flat.components()[0].covariance() - expected).cwiseAbs().maxCoeff() < 1e-20);
}

TEST_CASE("two well separated 1-D clusters are recovered") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 0.1);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(-5.0 + z(rng));
  for (int i = 0; i < 200; ++i) xs.push_back(5.0 + z(rng));
  const auto model = em_fit(column(xs), 2, FitConfig{});
  auto comps = model.components();
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.mean[0] < b.mean[0]; });
  CHECK(std::abs(comps[0].mean[0] + 5.0) < 0.2);
  CHECK(std::abs(comps[1].mean[0] - 5.0) < 0.2);
  CHECK(std::abs(comps[0].weight - 0.5) < 0.05);
  CHECK(std::abs(comps[1].weight - 0.5) < 0.05);
}

TEST_CASE("fitted 1-D mixtures integrate to one") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  for (std::size_t c = 1; c <= 4; ++c) {
    std::vector<double> xs;
    for (int i = 0; i < 300; ++i) xs.push_back((i % 3) * 4.0 + (0.2 + 0.3 * (i % 2)) * z(rng));
    const auto model = em_fit(column(xs), c, FitConfig{});
    double sd = 0.0;
    for (const auto& g : model.components()) sd = std::max(sd, std::sqrt(g.covariance()(0, 0)));
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    const double mass = oracle::simpson([&](double x) { return std::exp(log_density(model, vec({x}))); },
                                        *lo - 10.0 * sd, *hi + 10.0 * sd, 400000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("EM log-likelihood is monotone and weights stay normalized") {
  const auto data = oracle::gaussian_clusters({vec({0.0, 0.0}), vec({2.0, 1.0}), vec({-1.0, 3.0})}, 1.0, 150, 17);
  for (std::size_t c : {2u, 3u, 5u}) {
    FitConfig cfg;
    cfg.seed = c;
    const auto fit = em_fit_detailed(data, c, cfg);
    REQUIRE(fit.runs.size() == 3);
    for (const auto& run : fit.runs) {
      for (std::size_t i = 1; i < run.log_likelihood.size(); ++i) {
        CHECK(run.log_likelihood[i] >= run.log_likelihood[i - 1] - 1e-9);
      }
    }
    CHECK(fit.log_likelihood == doctest::Approx(total_log_likelihood(fit.model, data)).epsilon(1e-12));
  }
  // Every intermediate parameter set is reachable by capping the iterations.
  for (int iters = 1; iters <= 25; ++iters) {
    FitConfig cfg;
    cfg.max_iterations = iters;
    cfg.num_restarts = 1;
    const auto m = em_fit(data, 4, cfg);
    double sum = 0.0;
    for (const auto& g : m.components()) {
      sum += g.weight;
      CHECK((g.cholesky.diagonal().array() > 0.0).all());
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("fits are deterministic") {
  const auto data = oracle::gaussian_clusters({vec({0.0, 0.0}), vec({3.0, 3.0})}, 1.0, 100, 2);
  FitConfig cfg;
  cfg.seed = 99;
  const auto a = em_fit(data, 3, cfg);
  const auto b = em_fit(data, 3, cfg);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(a.components()[j].weight == b.components()[j].weight);
    CHECK((a.components()[j].mean.array() == b.components()[j].mean.array()).all());
    CHECK((a.components()[j].cholesky.array() == b.components()[j].cholesky.array()).all());
  }
}

TEST_CASE("em_fit preconditions") {
  FitConfig cfg;
  CHECK_THROWS_WITH_AS(em_fit(column({1.0, 2.0}), 3, cfg), doctest::Contains("InsufficientData"), Error);
  PointMatrix bad = column({1.0, std::nan(""), 2.0});
  CHECK_THROWS_AS(em_fit(bad, 1, cfg), Error);
  cfg.num_restarts = 0;
  CHECK_THROWS_AS(em_fit(column({1.0, 2.0}), 1, cfg), Error);
}

TEST_CASE("BIC by hand on {-1, 0, 1}") {
  FitConfig cfg;
  const auto data = column({-1.0, 0.0, 1.0});
  const auto model = em_fit(data, 1, cfg);
  const double var = 2.0 / 3.0 + 1e-6;
  const double ll = oracle::normal_log_pdf(-1.0, 0.0, var) + oracle::normal_log_pdf(0.0, 0.0, var) +
                    oracle::normal_log_pdf(1.0, 0.0, var);
  CHECK(free_parameter_count(1, 1) == 2);
  CHECK(bic(model, data) == doctest::Approx(2.0 * std::log(3.0) - 2.0 * ll).epsilon(1e-12));
  CHECK(bic(model, data) - 2.0 * std::log(3.0) == doctest::Approx(-2.0 * total_log_likelihood(model, data)));
  CHECK(free_parameter_count(3, 2) == 2 + 6 + 9);
}

TEST_CASE("BIC prefers one component on single-Gaussian data") {
  const auto data = sample(GmmModel({comp(1.0, vec({0.0}), Matrix::Identity(1, 1))}), 100, 1234);
  FitConfig cfg;
  const double b1 = bic(em_fit(data, 1, cfg), data);
  const double b3 = bic(em_fit(data, 3, cfg), data);
  CHECK(b1 < b3);

  const auto xs = as_vector(data);
  const auto r1 = oracle::em_1d(xs, 1, cfg.covariance_regularizer);
  const auto r3 = oracle::em_1d(xs, 3, cfg.covariance_regularizer);
  CHECK(oracle::bic_1d(r1, xs) < oracle::bic_1d(r3, xs));
  CHECK(b1 == doctest::Approx(oracle::bic_1d(r1, xs)).epsilon(1e-10));
}

TEST_CASE("elbow selection") {
  FitConfig cfg;
  SUBCASE("three clusters") {
    const auto data =
        oracle::gaussian_clusters({vec({0.0, 0.0}), vec({10.0, 0.0}), vec({5.0, 9.0})}, 1.0, 300, 8);
    const auto sel = select_components(data, 8, 0.01, cfg);
    REQUIRE(sel.bic.size() == 8);
    for (std::size_t c = 0; c < 8; ++c) CHECK(sel.bic[c] == bic(sel.models[c], data));
    CHECK(sel.selected == oracle::elbow_select(sel.bic, 0.01));
    CHECK(sel.selected == 3);
  }
  SUBCASE("single gaussian") {
    const auto data = oracle::gaussian_clusters({vec({1.0, 1.0})}, 1.0, 400, 9);
    const auto sel = select_components(data, 5, 0.01, cfg);
    CHECK(sel.selected == oracle::elbow_select(sel.bic, 0.01));
    CHECK(sel.selected == 1);
  }
  SUBCASE("too little data") {
    CHECK_THROWS_WITH_AS(select_components(column({1.0, 2.0, 3.0, 4.0}), 8, 0.01, cfg),
                         doctest::Contains("InsufficientData"), Error);
  }
  SUBCASE("rule oracle on synthetic BIC curves") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      std::vector<double> b(1 + t % 8);
      for (auto& x : b) x = 1000.0 + 30.0 * u(rng);
      std::size_t argmin = 0;
      for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i] < b[argmin]) argmin = i;
      std::size_t expected = argmin + 1;
      for (std::size_t i = 0; i < argmin; ++i) {
        if ((b[i] - b[i + 1]) / std::fabs(b[i]) < 0.01) {
          expected = i + 1;
          break;
        }
      }
      CHECK(oracle::elbow_select(b, 0.01) == expected);
    }
  }
}

TEST_CASE("sampling") {
  const GmmModel std_normal({comp(1.0, vec({0.0}), Matrix::Identity(1, 1))});
  const auto s = sample(std_normal, 10000, 42);
  CHECK(std::abs(s.mean()) < 0.05);
  const auto again = sample(std_normal, 10000, 42);
  CHECK((s.array() == again.array()).all());
  const auto other = sample(std_normal, 10000, 43);
  CHECK(!(s.array() == other.array()).all());

  const GmmModel tiny({comp(1.0, vec({2.0, -1.0}), 1e-12 * Matrix::Identity(2, 2))});
  const auto t = sample(tiny, 100, 1);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    CHECK(std::abs(t(i, 0) - 2.0) < 1e-4);
    CHECK(std::abs(t(i, 1) + 1.0) < 1e-4);
  }
}
