#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "logitunc/types.hpp"

namespace logitunc {

/// One weighted multivariate normal. The covariance is held only through its
/// lower Cholesky factor; a strictly positive diagonal certifies it is SPD.
struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cholesky;

  /// Factors `covariance`; throws NumericalFailure when it is not SPD.
  static GaussianComponent from_covariance(double weight, Vector mean, const Matrix& covariance);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean.size()); }
  Matrix covariance() const;
  double log_det_covariance() const;
  /// (d/2) ln(2 pi) + ln det(L): the negated log-density at the mean.
  double log_normalizer() const;

  /// Throws InvalidArgument unless weight is in (0, 1], shapes agree and the
  /// factor is lower triangular with a positive diagonal.
  void validate() const;
};

class GmmModel {
 public:
  static constexpr double kWeightSumTolerance = 1e-12;

  /// Validates every component and that weights sum to one within 1e-12.
  explicit GmmModel(std::vector<GaussianComponent> components);

  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  std::size_t num_components() const noexcept { return components_.size(); }
  std::size_t dimension() const noexcept { return components_.front().dimension(); }

 private:
  std::vector<GaussianComponent> components_;
};

struct FitConfig {
  int max_iterations = 500;
  double convergence_tol = 1e-7;          // relative log-likelihood change
  double covariance_regularizer = 1e-6;   // added to every M-step covariance diagonal
  std::uint64_t seed = 0;
  int num_restarts = 3;

  void validate() const;
};

struct EmRun {
  std::vector<double> log_likelihood;  // one entry per evaluated parameter set
  bool converged = false;
  int reseeded_components = 0;
};

struct EmFitResult {
  GmmModel model;
  double log_likelihood;
  std::size_t best_restart;
  std::vector<EmRun> runs;  // indexed by restart
};

/// EM for a `components`-component full-covariance mixture, best of
/// config.num_restarts k-means++-seeded runs (ties go to the lowest restart).
EmFitResult em_fit_detailed(const PointMatrix& data, std::size_t components, const FitConfig& config);

GmmModel em_fit(const PointMatrix& data, std::size_t components, const FitConfig& config);

/// ln N(x; mu, Sigma) including the component's own normalizer but not its weight.
double component_log_density(const GaussianComponent& component, const VectorRef& x);

/// ln sum_j w_j N(x; mu_j, Sigma_j), via log-sum-exp.
double log_density(const GmmModel& model, const VectorRef& x);

double total_log_likelihood(const GmmModel& model, const PointMatrix& data);

/// (c - 1) weights + c*d means + c*d(d+1)/2 covariance entries.
std::size_t free_parameter_count(std::size_t components, std::size_t dimension);

/// p ln(n) - 2 L; lower is better.
double bic(const GmmModel& model, const PointMatrix& data);

struct ComponentSelection {
  std::size_t selected = 0;
  std::vector<double> bic;        // bic[c - 1] for c = 1..c_max
  std::vector<GmmModel> models;   // models[c - 1], fitted with the given config
};

/// Fits c = 1..c_max and returns the smallest c that is either the BIC
/// minimizer or whose relative BIC improvement to c + 1 falls below elbow_tol.
ComponentSelection select_components(const PointMatrix& data, std::size_t c_max, double elbow_tol,
                                     const FitConfig& config);

/// n i.i.d. draws, one per row. Deterministic for a given seed.
PointMatrix sample(const GmmModel& model, std::size_t n, std::uint64_t seed);

/// ((x - mu)^T Sigma^{-1} (x - mu))^{1/2} by a triangular solve.
double mahalanobis(const GaussianComponent& component, const VectorRef& x);

/// Squared Mahalanobis distance; avoids the square root when only r^2 is needed.
double mahalanobis_squared(const GaussianComponent& component, const VectorRef& x);

}  // namespace logitunc
