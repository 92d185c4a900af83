#include "logitunc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "logitunc/error.hpp"

namespace logitunc {

void Hyperparams::validate() const {
  const auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_open_unit(u1) || !in_open_unit(u2) || !(u2 < u1)) {
    throw Error(ErrorCode::InvalidArgument, "hyperparameters require 0 < u2 < u1 < 1");
  }
  if (!in_open_unit(q1) || !in_open_unit(q2) || !(q2 < q1)) {
    throw Error(ErrorCode::InvalidArgument, "hyperparameters require 0 < q2 < q1 < 1");
  }
}

void ClassCalibration::validate() const {
  if (!std::isfinite(max_log_density) || !std::isfinite(s_q1) || !std::isfinite(s_q2) ||
      !std::isfinite(c1) || !std::isfinite(c2)) {
    throw Error(ErrorCode::InvalidArgument, "calibration has non-finite constants");
  }
  if (!(s_q2 < s_q1)) throw Error(ErrorCode::InvalidArgument, "calibration requires s_q2 < s_q1");
  if (!(c1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "calibration requires c1 > 0");
}

double max_log_density_estimate(const GmmModel& model, const PointMatrix& candidates) {
  if (candidates.rows() == 0) {
    throw Error(ErrorCode::EmptyCandidateSet, "mode estimate needs at least one candidate");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& comp : model.components()) best = std::max(best, log_density(model, comp.mean));
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    best = std::max(best, log_density(model, candidates.row(i).transpose()));
  }
  return best;
}

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

LogisticParams fit_logistic(double s_q1, double s_q2, const Hyperparams& hp) {
  if (s_q1 == s_q2) throw Error(ErrorCode::DegenerateScores, "s_q1 equals s_q2");
  const double a1 = std::log(1.0 / hp.u1 - 1.0);
  const double a2 = std::log(1.0 / hp.u2 - 1.0);
  if (a1 == a2) throw Error(ErrorCode::DegenerateHyperparams, "u1 equals u2");
  LogisticParams out;
  out.c2 = (s_q2 * a1 - s_q1 * a2) / (a1 - a2);
  out.c1 = -a2 / (s_q2 - out.c2);
  return out;
}

double logistic(double c1, double c2, double s) { return 1.0 / (1.0 + std::exp(-c1 * (s - c2))); }

ClassCalibration calibrate_class(const GmmModel& model, const PointMatrix& class_points,
                                 const Hyperparams& hp) {
  hp.validate();
  ClassCalibration out;
  out.max_log_density = max_log_density_estimate(model, class_points);

  std::vector<double> scores(static_cast<std::size_t>(class_points.rows()));
  for (Eigen::Index i = 0; i < class_points.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] =
        score(out.max_log_density, log_density(model, class_points.row(i).transpose()));
  }
  out.s_q1 = empirical_quantile(scores, hp.q1);
  out.s_q2 = empirical_quantile(scores, hp.q2);
  if (!(out.s_q2 < out.s_q1)) {
    throw Error(ErrorCode::DegenerateScores, "calibration scores do not separate the q1/q2 quantiles");
  }
  const auto params = fit_logistic(out.s_q1, out.s_q2, hp);
  out.c1 = params.c1;
  out.c2 = params.c2;
  out.validate();
  return out;
}

double class_uncertainty(const GmmModel& model, const ClassCalibration& calibration,
                         const VectorRef& x) {
  const double s = score(calibration.max_log_density, log_density(model, x));
  return logistic(calibration.c1, calibration.c2, s);
}

}  // namespace logitunc
