#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "logitunc/gmm.hpp"
#include "logitunc/uncertainty_model.hpp"

namespace logitunc {

// ---------------------------------------------------------------------------
// Highest density regions

/// Density threshold of the (1 - alpha) highest density region
/// R = {x : f(x) >= f_alpha}, estimated by Monte Carlo.
struct HdrEstimate {
  double alpha = 0.0;
  double f_alpha = 0.0;
  double log_f_alpha = 0.0;
  std::size_t n_mc = 0;
  std::uint64_t seed = 0;
};

/// Draws n_mc points from `model` and takes the alpha-quantile of their
/// log-densities (linear interpolation), so that about 1 - alpha of the
/// mass lies at or above the threshold. Requires n_mc >= 1000.
HdrEstimate hdr_threshold(const GmmModel& model, double alpha, std::size_t n_mc, std::uint64_t seed);

/// Same estimate over caller-supplied draws (one per row).
HdrEstimate hdr_threshold_from_points(const GmmModel& model, double alpha, const PointMatrix& draws);

/// Closed region membership: ln f(x) >= ln f_alpha.
bool hdr_contains(double f_alpha, double log_density_at_x);
inline bool hdr_contains_log(double log_f_alpha, double log_density_at_x) {
  return log_density_at_x >= log_f_alpha;
}

// Q1/Q2 pair the q1- and q2-HDRs with u1 and u2. Level pairs the
// (1 - alpha)-HDR with the uncertainty at its own boundary.
enum class HdrAnchor { Q1, Q2, Level };

struct HdrBoundCheck {
  HdrAnchor anchor = HdrAnchor::Q1;
  double mass = 0.0;      // q of the q-HDR
  double u_bound = 0.0;   // u1 or u2
  double log_f_alpha = 0.0;
  std::size_t n_mc = 0;
  std::size_t inside = 0;
  std::size_t violations = 0;  // inside with u >= u_bound (u > u_bound for Level)
  double violation_rate = 0.0; // violations / inside
};

/// Checks that points inside the q-HDR of class `cls` get u below the
/// matching anchor: estimates the HDR threshold from n_mc draws, then tests
/// n_mc fresh draws. Throws ClassNotFitted for unfitted classes.
HdrBoundCheck verify_hdr_uncertainty_bound(const UncertaintyModel& model, std::size_t cls, HdrAnchor anchor,
                                           std::size_t n_mc, std::uint64_t seed);

/// The counting step of verify_hdr_uncertainty_bound with an explicit
/// threshold and explicit check points.
HdrBoundCheck hdr_bound_violations(const FittedClass& fitted, const Hyperparams& hp, HdrAnchor anchor,
                                   const HdrEstimate& hdr, const PointMatrix& check_points);

/// Level check: every point of the (1 - alpha)-HDR must have u at most
/// g(max_log_density - ln f_alpha).
HdrBoundCheck verify_hdr_level_bound(const UncertaintyModel& model, std::size_t cls, double alpha,
                                     std::size_t n_mc, std::uint64_t seed);

std::string format_hdr_checks_csv(std::span<const HdrBoundCheck> checks, std::span<const std::size_t> classes);

// ---------------------------------------------------------------------------
// Gaussian geometry

/// r_alpha = sqrt of the (1 - alpha) quantile of chi-square with d degrees of
/// freedom: the Mahalanobis radius enclosing 1 - alpha of a Gaussian's mass.
double mahalanobis_radius(double alpha, std::size_t dimension);

/// ln f_alpha for the Gaussian HDR bounded by Mahalanobis radius r_alpha:
/// -r_alpha^2 / 2 - ln((2 pi)^{d/2} det(Sigma)^{1/2}).
///
/// The density condition phi(x) >= f_alpha rearranges to
/// r^2(x) <= -2 ln(f_alpha (2 pi)^{d/2} det(Sigma)^{1/2}), hence the minus sign.
double gaussian_hdr_log_threshold(const GaussianComponent& component, double r_alpha);

// ---------------------------------------------------------------------------
// Random wide networks

/// Fully connected ReLU network with `depth` hidden layers of equal width,
/// weights N(0, weight_variance / fan_in), hidden biases N(0, bias_variance)
/// and a scalar output whose bias is drawn from `final_bias_mixture`.
struct NetworkSimConfig {
  explicit NetworkSimConfig(GmmModel final_bias);

  std::size_t depth = 3;
  std::vector<std::size_t> widths{8, 32, 128, 512};
  std::vector<Vector> inputs;  // defaults to one input of dimension 4, unit norm
  double weight_variance = 1.0;  // zero collapses the network to its output bias
  double bias_variance = 0.1;
  GmmModel final_bias_mixture;
  std::size_t n_networks = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 1-D mixture with `components` unit-variance (by default) equal-weight
/// components whose means are evenly spaced over [-spread, spread].
GmmModel spread_bias_mixture(std::size_t components, double spread = 20.0, double variance = 1.0);

struct WidthSamples {
  std::size_t width = 0;
  PointMatrix outputs;  // n_networks x inputs.size()
};

/// Instantiates n_networks independent networks per width and records their
/// outputs at every input. Each network draws from its own stream of the
/// master seed.
std::vector<WidthSamples> simulate_wide_network(const NetworkSimConfig& config);

struct ConvergenceRow {
  std::size_t width = 0;
  std::size_t n = 0;
  std::size_t components = 0;
  double ks = 0.0;
  double bic_single = 0.0;
  double bic_mixture = 0.0;
};

/// Per width: fits a `components`-component 1-D mixture to the outputs at
/// `input_index` and reports the KS distance to the fitted CDF, alongside the
/// BIC of one- and `components`-component fits.
std::vector<ConvergenceRow> convergence_report(const std::vector<WidthSamples>& per_width,
                                               std::size_t components, const FitConfig& fit,
                                               std::size_t input_index = 0);

std::string format_convergence_csv(std::span<const ConvergenceRow> rows);

// ---------------------------------------------------------------------------
// Distribution tests

double normal_cdf(double z);

/// CDF of a 1-D mixture.
double mixture_cdf(const GmmModel& model, double x);

/// sup |F_n - F| between the empirical CDF of `samples` and a 1-D mixture.
double ks_statistic(std::span<const double> samples, const GmmModel& model);

/// Asymptotic one-sample KS critical value sqrt(-ln(alpha / 2) / 2) / sqrt(n).
double ks_critical_value(std::size_t n, double alpha);

/// Anderson-Darling A*^2 = A^2 (1 + 0.75/n + 2.25/n^2) for normality with
/// mean and variance estimated from the sample.
double anderson_darling_normal(std::span<const double> samples);

/// Upper 1% point of A*^2 when both parameters are estimated.
inline constexpr double kAndersonDarlingCritical1Pct = 1.035;

}  // namespace logitunc
