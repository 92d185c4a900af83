#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace logitunc {

// ---------------------------------------------------------------------------
// Expert deferral

/// Outcome of deferring every sample with u > threshold to a perfect expert.
struct CostCurve {
  double threshold = 0.0;
  std::size_t total = 0;
  std::size_t deferred = 0;     // u > threshold
  std::size_t kept_errors = 0;  // u <= threshold and misclassified

  std::size_t kept() const noexcept { return total - deferred; }
  /// deferred + c * kept_errors
  double total_cost(double error_cost) const noexcept {
    return static_cast<double>(deferred) + error_cost * static_cast<double>(kept_errors);
  }
};

CostCurve cost_curve(std::span<const double> uncertainties, const std::vector<bool>& correct, double threshold);

/// Total cost of deferral at threshold t with error cost c.
double deferral_cost(std::span<const double> uncertainties, const std::vector<bool>& correct, double threshold,
                     double error_cost);

/// Set of error costs c >= 0 for which method A is strictly cheaper than B.
/// Bounds may be open or closed; `empty` overrides both. low/high are the
/// rounded bounds; the finite crossing point is also kept as the exact
/// fraction bound_num / bound_den, which contains() compares against.
struct CostInterval {
  double low = 0.0;
  double high = std::numeric_limits<double>::infinity();
  bool low_inclusive = true;
  bool empty = false;
  long long bound_num = 0;
  long long bound_den = 1;

  bool contains(double c) const noexcept;
  bool unbounded_above() const noexcept { return high == std::numeric_limits<double>::infinity(); }
};

CostInterval cost_bound_range(const CostCurve& a, const CostCurve& b);

struct CostBoundRow {
  CostCurve a;
  CostCurve b;
  CostInterval interval;
};

std::vector<CostBoundRow> cost_bound_sweep(std::span<const double> uncerts_a, const std::vector<bool>& correct_a,
                                           std::span<const double> uncerts_b, const std::vector<bool>& correct_b,
                                           std::span<const double> thresholds);

/// CSV columns threshold,d_a,e_a,d_b,e_b,c_low,c_high,empty. Unbounded
/// c_high is written as `inf`; empty rows carry c_low=1, c_high=0.
std::string format_cost_bounds_csv(std::span<const CostBoundRow> rows);

// ---------------------------------------------------------------------------
// Drift

inline constexpr double kSigmaFloor = 1e-6;

struct Gaussian1D {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Sample mean and biased standard deviation, floored at kSigmaFloor.
Gaussian1D fit_gaussian_1d(std::span<const double> values);

/// KL(p || q) between two univariate normals.
double kl_gaussian(const Gaussian1D& p, const Gaussian1D& q);

/// KL(fit(stream) || fit(reference)).
double drift_kl(std::span<const double> reference, std::span<const double> stream);

struct DriftRow {
  double fraction = 0.0;
  double kl = 0.0;
};

std::string format_drift_csv(std::span<const DriftRow> rows);

}  // namespace logitunc
