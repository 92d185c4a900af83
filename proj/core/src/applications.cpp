#include "logitunc/applications.hpp"

#include <algorithm>
#include <cmath>

#include "logitunc/data_io.hpp"
#include "logitunc/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

namespace logitunc {

namespace {

using Rational = boost::multiprecision::cpp_rational;

}  // namespace

CostCurve cost_curve(std::span<const double> uncertainties, const std::vector<bool>& correct, double threshold) {
  if (uncertainties.size() != correct.size()) {
    throw Error(ErrorCode::LengthMismatch, "uncertainty and correctness vectors differ in length");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1]");
  }
  CostCurve out;
  out.threshold = threshold;
  out.total = uncertainties.size();
  for (std::size_t i = 0; i < uncertainties.size(); ++i) {
    if (uncertainties[i] > threshold) {
      ++out.deferred;
    } else if (!correct[i]) {
      ++out.kept_errors;
    }
  }
  return out;
}

double deferral_cost(std::span<const double> uncertainties, const std::vector<bool>& correct, double threshold,
                     double error_cost) {
  if (!(error_cost >= 0.0)) throw Error(ErrorCode::InvalidArgument, "error cost must be non-negative");
  return cost_curve(uncertainties, correct, threshold).total_cost(error_cost);
}

bool CostInterval::contains(double c) const noexcept {
  if (empty || !(c >= 0.0)) return false;
  if (low_inclusive && unbounded_above()) return true;
  // Exact comparison against the crossing point; a rounded bound would
  // misclassify costs within an ulp of it.
  const Rational rc(c);
  const Rational bound(bound_num, bound_den);
  if (!low_inclusive && rc <= bound) return false;
  if (!unbounded_above() && rc >= bound) return false;
  return true;
}

CostInterval cost_bound_range(const CostCurve& a, const CostCurve& b) {
  // Solve D_a + c E_a < D_b + c E_b over c >= 0.
  const auto da = static_cast<long long>(a.deferred), db = static_cast<long long>(b.deferred);
  const auto ea = static_cast<long long>(a.kept_errors), eb = static_cast<long long>(b.kept_errors);
  CostInterval out;
  if (ea < eb) {
    // A cheaper iff c > (D_a - D_b) / (E_b - E_a).
    if (da >= db) {
      out.bound_num = da - db;
      out.bound_den = eb - ea;
      out.low = static_cast<double>(out.bound_num) / static_cast<double>(out.bound_den);
      out.low_inclusive = false;
    }
  } else if (ea > eb) {
    // A cheaper iff c < (D_b - D_a) / (E_a - E_b).
    if (db > da) {
      out.bound_num = db - da;
      out.bound_den = ea - eb;
      out.high = static_cast<double>(out.bound_num) / static_cast<double>(out.bound_den);
    } else {
      out.empty = true;
    }
  } else if (!(da < db)) {
    out.empty = true;
  }
  return out;
}

std::vector<CostBoundRow> cost_bound_sweep(std::span<const double> uncerts_a, const std::vector<bool>& correct_a,
                                           std::span<const double> uncerts_b, const std::vector<bool>& correct_b,
                                           std::span<const double> thresholds) {
  if (thresholds.empty()) throw Error(ErrorCode::InvalidArgument, "threshold list is empty");
  std::vector<CostBoundRow> rows;
  rows.reserve(thresholds.size());
  for (const double t : thresholds) {
    CostBoundRow row{cost_curve(uncerts_a, correct_a, t), cost_curve(uncerts_b, correct_b, t), {}};
    row.interval = cost_bound_range(row.a, row.b);
    rows.push_back(row);
  }
  return rows;
}

std::string format_cost_bounds_csv(std::span<const CostBoundRow> rows) {
  std::string out = "threshold,d_a,e_a,d_b,e_b,c_low,c_high,empty\n";
  for (const auto& r : rows) {
    out += format_real(r.a.threshold) + "," + std::to_string(r.a.deferred) + "," +
           std::to_string(r.a.kept_errors) + "," + std::to_string(r.b.deferred) + "," +
           std::to_string(r.b.kept_errors) + ",";
    if (r.interval.empty) {
      out += "1,0,true\n";
    } else {
      out += format_real(r.interval.low) + "," +
             (r.interval.unbounded_above() ? std::string("inf") : format_real(r.interval.high)) + ",false\n";
    }
  }
  return out;
}

Gaussian1D fit_gaussian_1d(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit a Gaussian to no values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return Gaussian1D{mean, std::max(std::sqrt(ss / n), kSigmaFloor)};
}

double kl_gaussian(const Gaussian1D& p, const Gaussian1D& q) {
  if (!(p.sigma >= kSigmaFloor) || !(q.sigma >= kSigmaFloor)) {
    throw Error(ErrorCode::InvalidArgument, "Gaussian sigma below the floor");
  }
  const double dmu = p.mu - q.mu;
  const double kl = std::log(q.sigma / p.sigma) + (p.sigma * p.sigma + dmu * dmu) / (2.0 * q.sigma * q.sigma) - 0.5;
  return std::max(kl, 0.0);
}

double drift_kl(std::span<const double> reference, std::span<const double> stream) {
  return kl_gaussian(fit_gaussian_1d(stream), fit_gaussian_1d(reference));
}

std::string format_drift_csv(std::span<const DriftRow> rows) {
  std::string out = "fraction,kl\n";
  for (const auto& r : rows) out += format_real(r.fraction) + "," + format_real(r.kl) + "\n";
  return out;
}

}  // namespace logitunc
