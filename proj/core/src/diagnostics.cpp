#include "logitunc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "logitunc/calibration.hpp"
#include "logitunc/data_io.hpp"
#include "logitunc/error.hpp"
#include "logitunc/random.hpp"

namespace logitunc {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

}  // namespace

HdrEstimate hdr_threshold_from_points(const GmmModel& model, double alpha, const PointMatrix& draws) {
  require_alpha(alpha);
  std::vector<double> log_dens(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    log_dens[static_cast<std::size_t>(i)] = log_density(model, draws.row(i).transpose());
  }
  HdrEstimate out;
  out.alpha = alpha;
  out.log_f_alpha = empirical_quantile(log_dens, alpha);
  out.f_alpha = std::exp(out.log_f_alpha);
  out.n_mc = log_dens.size();
  return out;
}

HdrEstimate hdr_threshold(const GmmModel& model, double alpha, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 1000) throw Error(ErrorCode::InvalidArgument, "HDR estimation needs n_mc >= 1000");
  auto out = hdr_threshold_from_points(model, alpha, sample(model, n_mc, seed));
  out.seed = seed;
  return out;
}

bool hdr_contains(double f_alpha, double log_density_at_x) {
  if (!(f_alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "f_alpha must be positive");
  return hdr_contains_log(std::log(f_alpha), log_density_at_x);
}

HdrBoundCheck hdr_bound_violations(const FittedClass& fitted, const Hyperparams& hp, HdrAnchor anchor,
                                   const HdrEstimate& hdr, const PointMatrix& check_points) {
  if (anchor == HdrAnchor::Level) throw Error(ErrorCode::InvalidArgument, "level checks carry their own bound");
  HdrBoundCheck out;
  out.anchor = anchor;
  out.mass = anchor == HdrAnchor::Q1 ? hp.q1 : hp.q2;
  out.u_bound = anchor == HdrAnchor::Q1 ? hp.u1 : hp.u2;
  out.log_f_alpha = hdr.log_f_alpha;
  out.n_mc = static_cast<std::size_t>(check_points.rows());
  const auto& cal = fitted.calibration;
  for (Eigen::Index i = 0; i < check_points.rows(); ++i) {
    const double ld = log_density(fitted.gmm, check_points.row(i).transpose());
    if (!hdr_contains_log(hdr.log_f_alpha, ld)) continue;
    ++out.inside;
    if (logistic(cal.c1, cal.c2, score(cal.max_log_density, ld)) >= out.u_bound) ++out.violations;
  }
  out.violation_rate =
      out.inside == 0 ? 0.0 : static_cast<double>(out.violations) / static_cast<double>(out.inside);
  return out;
}

namespace {

const FittedClass& require_fitted(const UncertaintyModel& model, std::size_t cls) {
  const auto* fitted = model.fitted(cls);
  if (fitted == nullptr) {
    throw Error(ErrorCode::ClassNotFitted, "class " + std::to_string(cls) + " has no fitted mixture");
  }
  return *fitted;
}

}  // namespace

HdrBoundCheck verify_hdr_level_bound(const UncertaintyModel& model, std::size_t cls, double alpha,
                                     std::size_t n_mc, std::uint64_t seed) {
  const auto& fitted = require_fitted(model, cls);
  const auto& cal = fitted.calibration;
  const auto hdr = hdr_threshold(fitted.gmm, alpha, n_mc, derive_seed(seed, 0));
  const auto check = sample(fitted.gmm, n_mc, derive_seed(seed, 1));

  HdrBoundCheck out;
  out.anchor = HdrAnchor::Level;
  out.mass = 1.0 - alpha;
  out.u_bound = logistic(cal.c1, cal.c2, score(cal.max_log_density, hdr.log_f_alpha));
  out.log_f_alpha = hdr.log_f_alpha;
  out.n_mc = n_mc;
  for (Eigen::Index i = 0; i < check.rows(); ++i) {
    const double ld = log_density(fitted.gmm, check.row(i).transpose());
    if (!hdr_contains_log(hdr.log_f_alpha, ld)) continue;
    ++out.inside;
    if (logistic(cal.c1, cal.c2, score(cal.max_log_density, ld)) > out.u_bound) ++out.violations;
  }
  out.violation_rate =
      out.inside == 0 ? 0.0 : static_cast<double>(out.violations) / static_cast<double>(out.inside);
  return out;
}

HdrBoundCheck verify_hdr_uncertainty_bound(const UncertaintyModel& model, std::size_t cls, HdrAnchor anchor,
                                           std::size_t n_mc, std::uint64_t seed) {
  if (anchor == HdrAnchor::Level) throw Error(ErrorCode::InvalidArgument, "use verify_hdr_level_bound");
  const auto* fitted = &require_fitted(model, cls);
  const double mass = anchor == HdrAnchor::Q1 ? model.hyperparams.q1 : model.hyperparams.q2;
  const auto hdr = hdr_threshold(fitted->gmm, 1.0 - mass, n_mc, derive_seed(seed, 0));
  const auto check = sample(fitted->gmm, n_mc, derive_seed(seed, 1));
  return hdr_bound_violations(*fitted, model.hyperparams, anchor, hdr, check);
}

namespace {

const char* anchor_name(HdrAnchor anchor) {
  switch (anchor) {
    case HdrAnchor::Q1: return "q1";
    case HdrAnchor::Q2: return "q2";
    case HdrAnchor::Level: return "level";
  }
  return "?";
}

}  // namespace

std::string format_hdr_checks_csv(std::span<const HdrBoundCheck> checks, std::span<const std::size_t> classes) {
  if (checks.size() != classes.size()) throw Error(ErrorCode::LengthMismatch, "one class per check");
  std::string out = "class,anchor,hdr_mass,u_bound,log_f_alpha,n_mc,inside,violations,violation_rate\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    out += std::to_string(classes[i]) + "," + anchor_name(c.anchor) + "," +
           format_real(c.mass) + "," + format_real(c.u_bound) + "," + format_real(c.log_f_alpha) + "," +
           std::to_string(c.n_mc) + "," + std::to_string(c.inside) + "," + std::to_string(c.violations) +
           "," + format_real(c.violation_rate) + "\n";
  }
  return out;
}

double mahalanobis_radius(double alpha, std::size_t dimension) {
  require_alpha(alpha);
  if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(dimension));
  return std::sqrt(boost::math::quantile(chi2, 1.0 - alpha));
}

double gaussian_hdr_log_threshold(const GaussianComponent& component, double r_alpha) {
  return -component.log_normalizer() - 0.5 * (r_alpha * r_alpha);
}

// ---------------------------------------------------------------------------

NetworkSimConfig::NetworkSimConfig(GmmModel final_bias)
    : inputs{Vector::Constant(4, 0.5)}, final_bias_mixture(std::move(final_bias)) {}

void NetworkSimConfig::validate() const {
  if (depth == 0) throw Error(ErrorCode::InvalidArgument, "network depth must be positive");
  if (widths.empty()) throw Error(ErrorCode::InvalidArgument, "at least one width is required");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] == 0 || (i > 0 && widths[i] <= widths[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "widths must be positive and strictly increasing");
    }
  }
  if (inputs.empty()) throw Error(ErrorCode::InvalidArgument, "input set is empty");
  for (const auto& x : inputs) {
    if (x.size() == 0 || x.size() != inputs.front().size() || !x.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "inputs must be finite and share one dimension");
    }
  }
  if (!(weight_variance >= 0.0) || !(bias_variance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "weight variance must be >= 0 and bias variance > 0");
  }
  if (final_bias_mixture.dimension() != 1) {
    throw Error(ErrorCode::InvalidArgument, "final bias mixture must be one-dimensional");
  }
  if (n_networks == 0) throw Error(ErrorCode::InvalidArgument, "n_networks must be positive");
}

GmmModel spread_bias_mixture(std::size_t components, double spread, double variance) {
  if (components == 0) throw Error(ErrorCode::InvalidArgument, "need at least one component");
  std::vector<GaussianComponent> comps;
  for (std::size_t j = 0; j < components; ++j) {
    const double mean =
        components == 1 ? 0.0
                        : -spread + 2.0 * spread * static_cast<double>(j) / static_cast<double>(components - 1);
    comps.push_back(GaussianComponent::from_covariance(1.0 / static_cast<double>(components),
                                                       Vector::Constant(1, mean), Matrix::Constant(1, 1, variance)));
  }
  return GmmModel(std::move(comps));
}

namespace {

// One network, evaluated on all inputs at once. Weights feeding from units
// that are zero on every input cannot affect the output and are not drawn.
Eigen::RowVectorXd run_network(const NetworkSimConfig& config, std::size_t width, const Matrix& inputs,
                               std::mt19937_64& rng, std::discrete_distribution<std::size_t>& pick_bias) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double bias_sd = std::sqrt(config.bias_variance);
  const auto k = inputs.cols();
  const auto h = static_cast<Eigen::Index>(width);

  Matrix act = inputs;
  Matrix pre(h, k);
  std::vector<Eigen::Index> live;
  for (std::size_t layer = 0; layer < config.depth; ++layer) {
    const double w_sd = std::sqrt(config.weight_variance / static_cast<double>(act.rows()));
    live.clear();
    for (Eigen::Index j = 0; j < act.rows(); ++j) {
      if ((act.row(j).array() != 0.0).any()) live.push_back(j);
    }
    for (Eigen::Index i = 0; i < h; ++i) {
      auto row = pre.row(i);
      row.setConstant(bias_sd * normal(rng));
      for (const auto j : live) row.noalias() += (w_sd * normal(rng)) * act.row(j);
    }
    act = pre.cwiseMax(0.0);
  }

  const double w_sd = std::sqrt(config.weight_variance / static_cast<double>(h));
  const auto& bias_comp = config.final_bias_mixture.components()[pick_bias(rng)];
  const double out_bias = bias_comp.mean[0] + bias_comp.cholesky(0, 0) * normal(rng);
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Constant(k, out_bias);
  for (Eigen::Index j = 0; j < h; ++j) {
    if ((act.row(j).array() != 0.0).any()) out.noalias() += (w_sd * normal(rng)) * act.row(j);
  }
  return out;
}

}  // namespace

std::vector<WidthSamples> simulate_wide_network(const NetworkSimConfig& config) {
  config.validate();
  Matrix inputs(config.inputs.front().size(), static_cast<Eigen::Index>(config.inputs.size()));
  for (std::size_t m = 0; m < config.inputs.size(); ++m) inputs.col(static_cast<Eigen::Index>(m)) = config.inputs[m];

  std::vector<double> bias_weights;
  for (const auto& comp : config.final_bias_mixture.components()) bias_weights.push_back(comp.weight);

  std::vector<WidthSamples> out;
  for (std::size_t w = 0; w < config.widths.size(); ++w) {
    WidthSamples ws{config.widths[w], PointMatrix(static_cast<Eigen::Index>(config.n_networks), inputs.cols())};
    const auto width_seed = derive_seed(config.seed, w);
    for (std::size_t n = 0; n < config.n_networks; ++n) {
      auto rng = make_rng(width_seed, n);
      std::discrete_distribution<std::size_t> pick_bias(bias_weights.begin(), bias_weights.end());
      ws.outputs.row(static_cast<Eigen::Index>(n)) = run_network(config, ws.width, inputs, rng, pick_bias);
    }
    out.push_back(std::move(ws));
  }
  return out;
}

std::vector<ConvergenceRow> convergence_report(const std::vector<WidthSamples>& per_width,
                                               std::size_t components, const FitConfig& fit,
                                               std::size_t input_index) {
  std::vector<ConvergenceRow> rows;
  for (const auto& ws : per_width) {
    if (ws.outputs.rows() == 0) throw Error(ErrorCode::InvalidArgument, "convergence report needs samples");
    if (static_cast<Eigen::Index>(input_index) >= ws.outputs.cols()) {
      throw Error(ErrorCode::InvalidArgument, "input index out of range");
    }
    const PointMatrix column = ws.outputs.col(static_cast<Eigen::Index>(input_index));
    const auto single = em_fit(column, 1, fit);
    const auto mixture = em_fit(column, components, fit);

    std::vector<double> values(column.data(), column.data() + column.rows());
    ConvergenceRow row;
    row.width = ws.width;
    row.n = values.size();
    row.components = components;
    row.ks = ks_statistic(values, mixture);
    row.bic_single = bic(single, column);
    row.bic_mixture = bic(mixture, column);
    rows.push_back(row);
  }
  return rows;
}

std::string format_convergence_csv(std::span<const ConvergenceRow> rows) {
  std::string out = "width,n,components,ks_statistic,bic_single,bic_mixture\n";
  for (const auto& r : rows) {
    out += std::to_string(r.width) + "," + std::to_string(r.n) + "," + std::to_string(r.components) + "," +
           format_real(r.ks) + "," + format_real(r.bic_single) + "," + format_real(r.bic_mixture) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double mixture_cdf(const GmmModel& model, double x) {
  if (model.dimension() != 1) throw Error(ErrorCode::InvalidArgument, "mixture CDF needs a 1-D mixture");
  double cdf = 0.0;
  for (const auto& comp : model.components()) {
    cdf += comp.weight * normal_cdf((x - comp.mean[0]) / comp.cholesky(0, 0));
  }
  return cdf;
}

double ks_statistic(std::span<const double> samples, const GmmModel& model) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "KS statistic of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = mixture_cdf(model, sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  require_alpha(alpha);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample size must be positive");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

double anderson_darling_normal(std::span<const double> samples) {
  if (samples.size() < 8) throw Error(ErrorCode::InsufficientData, "Anderson-Darling needs at least 8 points");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateScores, "Anderson-Darling on a constant sample");

  constexpr double kFloor = 1e-300;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lo = std::max(normal_cdf((x[i] - mean) / sd), kFloor);
    const double hi = std::max(normal_cdf(-(x[x.size() - 1 - i] - mean) / sd), kFloor);
    sum += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  const double a2 = -n - sum / n;
  return a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
}

}  // namespace logitunc
