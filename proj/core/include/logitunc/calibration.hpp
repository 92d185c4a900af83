#pragma once

#include <span>

#include "logitunc/gmm.hpp"
#include "logitunc/types.hpp"

namespace logitunc {

/// Calibration anchors: the q1 score quantile maps to uncertainty u1 and the
/// q2 quantile to u2. Quantiles are fractions, not percentiles.
struct Hyperparams {
  double u1 = 0.5;
  double u2 = 0.2;
  double q1 = 0.8;
  double q2 = 0.6;

  /// Requires 0 < u2 < u1 < 1 and 0 < q2 < q1 < 1.
  void validate() const;
};

struct LogisticParams {
  double c1 = 0.0;  // slope
  double c2 = 0.0;  // midpoint
};

struct ClassCalibration {
  double max_log_density = 0.0;
  double s_q1 = 0.0;
  double s_q2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  /// Requires s_q2 < s_q1 and c1 > 0.
  void validate() const;
};

/// Approximates ln max_t gmm(t) by the best of the component means and the
/// supplied candidate points (one per row).
double max_log_density_estimate(const GmmModel& model, const PointMatrix& candidates);

/// Log-density gap to the estimated mode. Negative when x is denser than
/// every candidate; not clamped.
inline double score(double max_log_density, double log_density_at_x) {
  return max_log_density - log_density_at_x;
}

/// Linear-interpolation quantile at position q * (n - 1) of the sorted values.
double empirical_quantile(std::span<const double> values, double q);

/// Solves g(s_q1) = u1, g(s_q2) = u2 for the logistic slope and midpoint.
LogisticParams fit_logistic(double s_q1, double s_q2, const Hyperparams& hp);

/// 1 / (1 + exp(-c1 (s - c2))).
double logistic(double c1, double c2, double s);

/// Scores `class_points` against `model`, takes their q1/q2 quantiles and
/// fits the logistic map. The mode estimate uses the same points.
ClassCalibration calibrate_class(const GmmModel& model, const PointMatrix& class_points,
                                 const Hyperparams& hp);

/// u(x) = g(s(x)) for one class.
double class_uncertainty(const GmmModel& model, const ClassCalibration& calibration,
                         const VectorRef& x);

}  // namespace logitunc
