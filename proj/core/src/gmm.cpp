#include "logitunc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "logitunc/error.hpp"
#include "logitunc/random.hpp"

namespace logitunc {

namespace {

constexpr double kCollapsedMass = 1e-10;

double log_sum_exp(const double* values, std::size_t n) {
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) max = std::max(max, values[j]);
  if (!std::isfinite(max)) return max;
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += std::exp(values[j] - max);
  return max + std::log(sum);
}

void require_finite(const PointMatrix& data) {
  if (!data.allFinite()) throw Error(ErrorCode::InvalidArgument, "data contains non-finite values");
}

// Responsibility-weighted mean and covariance (+ reg on the diagonal).
GaussianComponent weighted_gaussian(const PointMatrix& data, const Eigen::Ref<const Vector>& resp,
                                    double mass, double weight, double reg) {
  const auto d = data.cols();
  Vector sum = Vector::Zero(d);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    sum.noalias() += resp[i] * data.row(i).transpose();
  }
  Vector mean = sum / mass;

  Matrix acc = Matrix::Zero(d, d);
  Vector diff(d);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    diff.noalias() = data.row(i).transpose() - mean;
    acc.noalias() += (resp[i] * diff) * diff.transpose();
  }
  Matrix cov = acc / mass;
  cov.diagonal().array() += reg;
  return GaussianComponent::from_covariance(weight, std::move(mean), cov);
}

Matrix global_covariance(const PointMatrix& data, double reg) {
  const Vector ones = Vector::Ones(data.rows());
  return weighted_gaussian(data, ones, static_cast<double>(data.rows()), 1.0, reg).covariance();
}

std::vector<Eigen::Index> kmeans_plus_plus(const PointMatrix& data, std::size_t c,
                                           std::mt19937_64& rng) {
  const auto n = data.rows();
  std::vector<Eigen::Index> centers;
  centers.reserve(c);
  std::uniform_int_distribution<Eigen::Index> uniform_index(0, n - 1);
  centers.push_back(uniform_index(rng));

  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  while (centers.size() < c) {
    const auto last = data.row(centers.back());
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = (data.row(i) - last).squaredNorm();
      auto& slot = nearest[static_cast<std::size_t>(i)];
      slot = std::min(slot, d2);
      total += slot;
    }
    if (!(total > 0.0)) {
      centers.push_back(uniform_index(rng));
      continue;
    }
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    double running = 0.0;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      running += nearest[static_cast<std::size_t>(i)];
      if (running > target) {
        pick = i;
        break;
      }
    }
    centers.push_back(pick);
  }
  return centers;
}

std::vector<GaussianComponent> initialize(const PointMatrix& data, std::size_t c, double reg,
                                          const Matrix& fallback_cov, std::mt19937_64& rng) {
  const auto n = data.rows();
  const auto centers = kmeans_plus_plus(data, c, rng);

  Matrix hard = Matrix::Zero(n, static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      const double d2 = (data.row(i) - data.row(centers[j])).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<Eigen::Index>(j);
      }
    }
    hard(i, best) = 1.0;
  }

  const double weight = 1.0 / static_cast<double>(c);
  std::vector<GaussianComponent> comps;
  comps.reserve(c);
  for (std::size_t j = 0; j < c; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const double mass = hard.col(col).sum();
    if (mass < 2.0) {
      comps.push_back(GaussianComponent::from_covariance(
          weight, data.row(centers[j]).transpose(), fallback_cov));
    } else {
      comps.push_back(weighted_gaussian(data, hard.col(col), mass, weight, reg));
    }
  }
  return comps;
}

struct EStep {
  double log_likelihood = 0.0;
  Matrix resp;             // n x c
  Vector point_log_density;
};

EStep expectation(const PointMatrix& data, const std::vector<GaussianComponent>& comps) {
  const auto n = data.rows();
  const auto c = comps.size();
  EStep out;
  out.resp.resize(n, static_cast<Eigen::Index>(c));
  out.point_log_density.resize(n);

  // Same arithmetic as component_log_density, hoisted out of the point loop.
  std::vector<double> log_weight(c);
  std::vector<double> log_norm(c);
  for (std::size_t j = 0; j < c; ++j) {
    log_weight[j] = std::log(comps[j].weight);
    log_norm[j] = comps[j].log_normalizer();
  }

  std::vector<double> lp(c);
  Vector diff(data.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      diff.noalias() = data.row(i).transpose() - comps[j].mean;
      comps[j].cholesky.triangularView<Eigen::Lower>().solveInPlace(diff);
      lp[j] = log_weight[j] + (-log_norm[j] - 0.5 * diff.squaredNorm());
    }
    const double lse = log_sum_exp(lp.data(), c);
    if (!std::isfinite(lse)) {
      throw Error(ErrorCode::NumericalFailure, "non-finite log-density during E-step");
    }
    for (std::size_t j = 0; j < c; ++j) {
      out.resp(i, static_cast<Eigen::Index>(j)) = std::exp(lp[j] - lse);
    }
    out.point_log_density[i] = lse;
    out.log_likelihood += lse;
  }
  return out;
}

std::vector<GaussianComponent> maximization(const PointMatrix& data, const EStep& e, double reg,
                                            const Matrix& fallback_cov, int& reseeded) {
  const auto c = static_cast<std::size_t>(e.resp.cols());
  const Vector mass = e.resp.colwise().sum().transpose();

  // Collapsed components restart at the currently least-explained point.
  Eigen::Index worst = 0;
  e.point_log_density.minCoeff(&worst);
  const double reseed_mass = 1.0;

  double total = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    total += mass[static_cast<Eigen::Index>(j)] < kCollapsedMass ? reseed_mass
                                                                 : mass[static_cast<Eigen::Index>(j)];
  }

  std::vector<GaussianComponent> comps;
  comps.reserve(c);
  for (std::size_t j = 0; j < c; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (mass[col] < kCollapsedMass) {
      ++reseeded;
      comps.push_back(GaussianComponent::from_covariance(
          reseed_mass / total, data.row(worst).transpose(), fallback_cov));
    } else {
      comps.push_back(weighted_gaussian(data, e.resp.col(col), mass[col], mass[col] / total, reg));
    }
  }
  return comps;
}

struct RunOutcome {
  std::vector<GaussianComponent> comps;
  EmRun run;
};

RunOutcome run_em(const PointMatrix& data, std::size_t c, const FitConfig& config,
                  const Matrix& fallback_cov, std::mt19937_64& rng) {
  const double reg = config.covariance_regularizer;
  RunOutcome out{initialize(data, c, reg, fallback_cov, rng), {}};
  for (int iter = 0;; ++iter) {
    const EStep e = expectation(data, out.comps);
    if (!out.run.log_likelihood.empty()) {
      const double prev = out.run.log_likelihood.back();
      const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
      if (std::abs(e.log_likelihood - prev) / scale < config.convergence_tol) {
        out.run.log_likelihood.push_back(e.log_likelihood);
        out.run.converged = true;
        break;
      }
    }
    out.run.log_likelihood.push_back(e.log_likelihood);
    if (iter == config.max_iterations) break;
    out.comps = maximization(data, e, reg, fallback_cov, out.run.reseeded_components);
  }
  return out;
}

}  // namespace

GaussianComponent GaussianComponent::from_covariance(double weight, Vector mean,
                                                     const Matrix& covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw Error(ErrorCode::InvalidArgument, "covariance shape does not match mean");
  }
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "covariance is not positive definite");
  }
  GaussianComponent out{weight, std::move(mean), llt.matrixL()};
  if ((out.cholesky.diagonal().array() <= 0.0).any() || !out.cholesky.allFinite()) {
    throw Error(ErrorCode::NumericalFailure, "Cholesky factor has a non-positive diagonal");
  }
  return out;
}

Matrix GaussianComponent::covariance() const { return cholesky * cholesky.transpose(); }

double GaussianComponent::log_det_covariance() const {
  return 2.0 * cholesky.diagonal().array().log().sum();
}

double GaussianComponent::log_normalizer() const {
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return half_log_two_pi * static_cast<double>(dimension()) +
         cholesky.diagonal().array().log().sum();
}

void GaussianComponent::validate() const {
  if (!(weight > 0.0 && weight <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "component weight outside (0, 1]");
  }
  const auto d = mean.size();
  if (d == 0 || cholesky.rows() != d || cholesky.cols() != d) {
    throw Error(ErrorCode::InvalidArgument, "component shapes are inconsistent");
  }
  if (!mean.allFinite() || !cholesky.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "component has non-finite parameters");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(cholesky(i, i) > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "Cholesky diagonal must be strictly positive");
    }
    for (Eigen::Index j = i + 1; j < d; ++j) {
      if (cholesky(i, j) != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "Cholesky factor must be lower triangular");
      }
    }
  }
}

GmmModel::GmmModel(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorCode::InvalidArgument, "mixture needs a component");
  double sum = 0.0;
  for (const auto& comp : components_) {
    comp.validate();
    if (comp.dimension() != components_.front().dimension()) {
      throw Error(ErrorCode::InvalidArgument, "mixture components differ in dimension");
    }
    sum += comp.weight;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorCode::InvalidArgument, "mixture weights do not sum to 1");
  }
}

void FitConfig::validate() const {
  if (max_iterations <= 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
  if (!(convergence_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "convergence_tol must be positive");
  if (!(covariance_regularizer > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "covariance_regularizer must be positive");
  }
  if (num_restarts <= 0) throw Error(ErrorCode::InvalidArgument, "num_restarts must be positive");
}

EmFitResult em_fit_detailed(const PointMatrix& data, std::size_t components, const FitConfig& config) {
  config.validate();
  if (components == 0) throw Error(ErrorCode::InvalidArgument, "component count must be >= 1");
  if (data.cols() == 0) throw Error(ErrorCode::InvalidArgument, "data has zero dimensions");
  if (static_cast<std::size_t>(data.rows()) < components) {
    throw Error(ErrorCode::InsufficientData,
                std::to_string(data.rows()) + " points for " + std::to_string(components) + " components");
  }
  require_finite(data);

  const Matrix fallback_cov = global_covariance(data, config.covariance_regularizer);

  std::optional<RunOutcome> best;
  std::size_t best_restart = 0;
  std::vector<EmRun> runs;
  std::optional<Error> last_failure;
  for (int r = 0; r < config.num_restarts; ++r) {
    auto rng = make_rng(config.seed, static_cast<std::uint64_t>(r));
    try {
      auto outcome = run_em(data, components, config, fallback_cov, rng);
      runs.push_back(outcome.run);
      if (!best || outcome.run.log_likelihood.back() > best->run.log_likelihood.back()) {
        best = std::move(outcome);
        best_restart = static_cast<std::size_t>(r);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericalFailure) throw;
      runs.push_back(EmRun{});
      last_failure = e;
    }
  }
  if (!best) throw *last_failure;
  const double ll = best->run.log_likelihood.back();
  return EmFitResult{GmmModel(std::move(best->comps)), ll, best_restart, std::move(runs)};
}

GmmModel em_fit(const PointMatrix& data, std::size_t components, const FitConfig& config) {
  return em_fit_detailed(data, components, config).model;
}

double mahalanobis_squared(const GaussianComponent& component, const VectorRef& x) {
  const Vector diff = x - component.mean;
  return component.cholesky.triangularView<Eigen::Lower>().solve(diff).squaredNorm();
}

double mahalanobis(const GaussianComponent& component, const VectorRef& x) {
  return std::sqrt(mahalanobis_squared(component, x));
}

double component_log_density(const GaussianComponent& component, const VectorRef& x) {
  return -component.log_normalizer() - 0.5 * mahalanobis_squared(component, x);
}

double log_density(const GmmModel& model, const VectorRef& x) {
  const auto& comps = model.components();
  if (static_cast<std::size_t>(x.size()) != model.dimension()) {
    throw Error(ErrorCode::InvalidArgument, "point dimension does not match the mixture");
  }
  std::vector<double> lp(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) {
    lp[j] = std::log(comps[j].weight) + component_log_density(comps[j], x);
  }
  return log_sum_exp(lp.data(), lp.size());
}

double total_log_likelihood(const GmmModel& model, const PointMatrix& data) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) total += log_density(model, data.row(i).transpose());
  return total;
}

std::size_t free_parameter_count(std::size_t components, std::size_t dimension) {
  return (components - 1) + components * dimension + components * dimension * (dimension + 1) / 2;
}

double bic(const GmmModel& model, const PointMatrix& data) {
  if (data.rows() < 2) throw Error(ErrorCode::InsufficientData, "BIC needs at least two points");
  const auto p = static_cast<double>(free_parameter_count(model.num_components(), model.dimension()));
  return p * std::log(static_cast<double>(data.rows())) - 2.0 * total_log_likelihood(model, data);
}

ComponentSelection select_components(const PointMatrix& data, std::size_t c_max, double elbow_tol,
                                     const FitConfig& config) {
  if (c_max == 0) throw Error(ErrorCode::InvalidArgument, "c_max must be positive");
  if (!(elbow_tol > 0.0 && elbow_tol < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "elbow_tol must lie in (0, 1)");
  }
  if (static_cast<std::size_t>(data.rows()) < c_max) {
    throw Error(ErrorCode::InsufficientData, std::to_string(data.rows()) +
                                                 " points cannot support c_max = " + std::to_string(c_max));
  }

  ComponentSelection out;
  for (std::size_t c = 1; c <= c_max; ++c) {
    out.models.push_back(em_fit(data, c, config));
    out.bic.push_back(bic(out.models.back(), data));
  }

  const auto argmin = static_cast<std::size_t>(
      std::min_element(out.bic.begin(), out.bic.end()) - out.bic.begin());
  for (std::size_t i = 0; i < c_max; ++i) {
    if (i == argmin) {
      out.selected = i + 1;
      break;
    }
    const double improvement = (out.bic[i] - out.bic[i + 1]) / std::abs(out.bic[i]);
    if (improvement < elbow_tol) {
      out.selected = i + 1;
      break;
    }
  }
  return out;
}

PointMatrix sample(const GmmModel& model, std::size_t n, std::uint64_t seed) {
  const auto& comps = model.components();
  const auto d = static_cast<Eigen::Index>(model.dimension());
  std::vector<double> weights;
  weights.reserve(comps.size());
  for (const auto& comp : comps) weights.push_back(comp.weight);

  auto rng = make_rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  PointMatrix out(static_cast<Eigen::Index>(n), d);
  Vector z(d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& comp = comps[pick(rng)];
    for (Eigen::Index k = 0; k < d; ++k) z[k] = normal(rng);
    out.row(i) = (comp.mean + comp.cholesky.triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

}  // namespace logitunc
