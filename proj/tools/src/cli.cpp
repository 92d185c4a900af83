#include "logitunc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <functional>
#include <optional>
#include <ostream>

#include "logitunc/applications.hpp"
#include "logitunc/data_io.hpp"
#include "logitunc/diagnostics.hpp"
#include "logitunc/error.hpp"
#include "logitunc/random.hpp"

namespace logitunc::cli {

using nlohmann::json;

namespace {

Error usage(const std::string& message) { return Error(ErrorCode::InvalidArgument, message); }

double json_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw usage("config key '" + key + "' must be a number");
  return v.get<double>();
}

long long json_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw usage("config key '" + key + "' must be an integer");
  return v.get<long long>();
}

std::size_t json_count(const json& v, const std::string& key) {
  const auto n = json_integer(v, key);
  if (n < 0) throw usage("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

std::string json_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw usage("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw usage(std::string("missing required ") + flag);
}

// Flags as typed on the command line; unset ones leave the config alone.
struct Flags {
  std::string config_path;
  std::optional<double> u1, u2, q1, q2;
  std::optional<int> max_iterations;
  std::optional<double> convergence_tol;
  std::optional<double> covariance_regularizer;
  std::optional<int> num_restarts;
  std::optional<std::size_t> c_max;
  std::optional<double> elbow_tol;
  std::optional<std::size_t> min_samples_per_class;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> train, model, data, out;

  // drift
  std::string reference;
  std::vector<std::string> streams;
  std::vector<double> fractions;
  // defer
  std::string a_report, b_report;
  std::vector<double> thresholds;
  // diagnose
  double alpha = 0.05;
  std::size_t n_mc = 50000;
  // simulate-nn
  std::vector<std::size_t> widths{8, 32, 128, 512};
  std::size_t depth = 3;
  std::size_t components = 2;
  std::size_t n_networks = 5000;
  double spread = 20.0;
  double weight_variance = 1.0;
  double bias_variance = 0.1;
};

RunConfig resolve(const Flags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) {
    std::string text;
    try {
      text = read_file(flags.config_path);
    } catch (const Error& e) {
      throw usage("cannot read config: " + e.detail());
    }
    cfg = apply_config_text(text, cfg);
  }
  auto& hp = cfg.hyperparams;
  if (flags.u1) hp.u1 = as_fraction(*flags.u1);
  if (flags.u2) hp.u2 = as_fraction(*flags.u2);
  if (flags.q1) hp.q1 = as_fraction(*flags.q1);
  if (flags.q2) hp.q2 = as_fraction(*flags.q2);
  auto& fit = cfg.fit.fit;
  if (flags.max_iterations) fit.max_iterations = *flags.max_iterations;
  if (flags.convergence_tol) fit.convergence_tol = *flags.convergence_tol;
  if (flags.covariance_regularizer) fit.covariance_regularizer = *flags.covariance_regularizer;
  if (flags.num_restarts) fit.num_restarts = *flags.num_restarts;
  if (flags.c_max) cfg.fit.c_max = *flags.c_max;
  if (flags.elbow_tol) cfg.fit.elbow_tol = *flags.elbow_tol;
  if (flags.min_samples_per_class) cfg.fit.min_samples_per_class = *flags.min_samples_per_class;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.train) cfg.train = *flags.train;
  if (flags.model) cfg.model = *flags.model;
  if (flags.data) cfg.data = *flags.data;
  if (flags.out) cfg.out = *flags.out;
  cfg.fit.fit.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

json config_json(const RunConfig& cfg) { return json::parse(config_to_json(cfg)); }

void check_dimensions(const RecordSet& records, const UncertaintyModel& model, const std::string& what) {
  if (records.num_classes != model.num_classes) {
    throw Error(ErrorCode::MalformedRow, what + " has " + std::to_string(records.num_classes) +
                                             " logit columns but the model has " +
                                             std::to_string(model.num_classes) + " classes");
  }
}

std::vector<double> uncertainties_of(const UncertaintyModel& model, const std::string& path) {
  const auto records = load_logit_records(path);
  check_dimensions(records, model, path);
  return batch_predict(model, records);
}

// Correctness of each report row against the true labels of the data file.
std::vector<bool> report_correctness(const std::vector<ReportRow>& rows, const RecordSet& data,
                                     const std::string& path) {
  if (rows.size() != data.size()) {
    throw Error(ErrorCode::LengthMismatch, path + " has " + std::to_string(rows.size()) +
                                               " rows but the data has " + std::to_string(data.size()));
  }
  std::vector<bool> correct(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].sample_index >= data.size()) {
      throw Error(ErrorCode::MalformedRow, path + ": sample_index " + std::to_string(rows[i].sample_index) +
                                               " is outside the data");
    }
    correct[i] = rows[i].predicted_label == data.records[rows[i].sample_index].true_label;
  }
  return correct;
}

std::vector<double> report_uncertainties(const std::vector<ReportRow>& rows) {
  std::vector<double> u;
  u.reserve(rows.size());
  for (const auto& r : rows) u.push_back(r.uncertainty);
  return u;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON run configuration");
  sub->add_option("--seed", f.seed, "master seed (unsigned 64-bit)");
  sub->add_option("--out", f.out, "output file");
}

void add_fit_controls(CLI::App* sub, Flags& f) {
  sub->add_option("--max-iterations", f.max_iterations, "EM iteration cap per restart (default 500)");
  sub->add_option("--convergence-tol", f.convergence_tol, "relative log-likelihood change that stops EM (default 1e-7)");
  sub->add_option("--covariance-regularizer", f.covariance_regularizer, "added to covariance diagonals (default 1e-6)");
  sub->add_option("--num-restarts", f.num_restarts, "EM restarts, best log-likelihood wins (default 3)");
}

struct Command {
  json extras;  // subcommand-specific settings for the config echo
  std::function<void(const RunConfig&)> check;
  std::function<std::string(const RunConfig&, std::ostream&)> run;
};

Command fit_command(const Flags&) {
  Command c;
  c.extras = json::object();
  c.check = [](const RunConfig& cfg) {
    require_path(cfg.train, "--train");
    require_path(cfg.out, "--out");
  };
  c.run = [](const RunConfig& cfg, std::ostream& out) {
    const auto train = load_logit_records(cfg.train);
    const auto model = fit_uncertainty_model(train, cfg.hyperparams, cfg.fit);
    save_model(model, cfg.out);
    for (std::size_t i = 0; i < model.num_classes; ++i) {
      if (const auto* u = std::get_if<UnfittedClass>(&model.per_class[i])) {
        out << "class " << i << " not fitted: " << u->reason << "\n";
      }
    }
    return "fitted " + std::to_string(model.fitted_count()) + " of " + std::to_string(model.num_classes) +
           " classes";
  };
  return c;
}

Command eval_command(const Flags&) {
  Command c;
  c.extras = json::object();
  c.check = [](const RunConfig& cfg) {
    require_path(cfg.model, "--model");
    require_path(cfg.data, "--data");
    require_path(cfg.out, "--out");
  };
  c.run = [](const RunConfig& cfg, std::ostream&) {
    const auto model = load_model(cfg.model);
    const auto records = load_logit_records(cfg.data);
    check_dimensions(records, model, cfg.data);
    const auto u = batch_predict(model, records);
    write_uncertainty_report(records, u, cfg.out);
    return std::to_string(records.size()) + " rows scored";
  };
  return c;
}

Command drift_command(const Flags& f) {
  Command c;
  c.extras = {{"reference", f.reference}, {"streams", f.streams}, {"fractions", f.fractions}};
  if (f.fractions.empty()) {
    std::vector<double> ordinal;
    for (std::size_t i = 0; i < f.streams.size(); ++i) ordinal.push_back(static_cast<double>(i));
    c.extras["fractions"] = ordinal;
  }
  c.check = [&f](const RunConfig& cfg) {
    require_path(cfg.model, "--model");
    require_path(f.reference, "--reference");
    if (f.streams.empty()) throw usage("missing required --stream");
    require_path(cfg.out, "--out");
    if (!f.fractions.empty() && f.fractions.size() != f.streams.size()) {
      throw Error(ErrorCode::LengthMismatch, "--fractions needs one value per --stream");
    }
  };
  c.run = [&f, fractions = c.extras["fractions"].get<std::vector<double>>()](const RunConfig& cfg,
                                                                              std::ostream&) {
    const auto model = load_model(cfg.model);
    const auto reference = uncertainties_of(model, f.reference);
    std::vector<DriftRow> rows;
    for (std::size_t i = 0; i < f.streams.size(); ++i) {
      rows.push_back({fractions[i], drift_kl(reference, uncertainties_of(model, f.streams[i]))});
    }
    write_file_atomic(cfg.out, format_drift_csv(rows));
    return std::to_string(rows.size()) + " streams compared";
  };
  return c;
}

Command defer_command(const Flags& f) {
  Command c;
  c.extras = {{"a_report", f.a_report}, {"b_report", f.b_report}, {"thresholds", f.thresholds}};
  c.check = [&f](const RunConfig& cfg) {
    require_path(f.a_report, "--a-report");
    require_path(f.b_report, "--b-report");
    require_path(cfg.data, "--data");
    require_path(cfg.out, "--out");
    if (f.thresholds.empty()) throw usage("missing required --thresholds");
    for (double t : f.thresholds) {
      if (!(t >= 0.0 && t <= 1.0)) throw usage("thresholds must lie in [0, 1]");
    }
  };
  c.run = [&f](const RunConfig& cfg, std::ostream&) {
    const auto data = load_logit_records(cfg.data);
    const auto a = load_uncertainty_report(f.a_report);
    const auto b = load_uncertainty_report(f.b_report);
    const auto rows = cost_bound_sweep(report_uncertainties(a), report_correctness(a, data, f.a_report),
                                       report_uncertainties(b), report_correctness(b, data, f.b_report),
                                       f.thresholds);
    write_file_atomic(cfg.out, format_cost_bounds_csv(rows));
    return std::to_string(rows.size()) + " thresholds swept";
  };
  return c;
}

Command diagnose_command(const Flags& f) {
  Command c;
  c.extras = {{"alpha", f.alpha}, {"n_mc", f.n_mc}};
  c.check = [&f](const RunConfig& cfg) {
    require_path(cfg.model, "--model");
    require_path(cfg.out, "--out");
    if (!(f.alpha > 0.0 && f.alpha < 1.0)) throw usage("--alpha must lie in (0, 1)");
    if (f.n_mc < 1000) throw usage("--n-mc must be at least 1000");
  };
  c.run = [&f](const RunConfig& cfg, std::ostream&) {
    const auto model = load_model(cfg.model);
    std::vector<HdrBoundCheck> checks;
    std::vector<std::size_t> classes;
    for (std::size_t cls = 0; cls < model.num_classes; ++cls) {
      if (model.fitted(cls) == nullptr) continue;
      checks.push_back(verify_hdr_uncertainty_bound(model, cls, HdrAnchor::Q1, f.n_mc, derive_seed(cfg.seed, 3 * cls)));
      checks.push_back(
          verify_hdr_uncertainty_bound(model, cls, HdrAnchor::Q2, f.n_mc, derive_seed(cfg.seed, 3 * cls + 1)));
      checks.push_back(verify_hdr_level_bound(model, cls, f.alpha, f.n_mc, derive_seed(cfg.seed, 3 * cls + 2)));
      classes.insert(classes.end(), 3, cls);
    }
    write_file_atomic(cfg.out, format_hdr_checks_csv(checks, classes));
    return std::to_string(classes.size() / 3) + " classes checked";
  };
  return c;
}

Command simulate_command(const Flags& f) {
  Command c;
  c.extras = {{"widths", f.widths},   {"depth", f.depth},
              {"components", f.components}, {"n", f.n_networks},
              {"spread", f.spread},   {"weight_variance", f.weight_variance},
              {"bias_variance", f.bias_variance}};
  c.check = [&f](const RunConfig& cfg) {
    require_path(cfg.out, "--out");
    if (f.components == 0) throw usage("--components must be positive");
    if (f.n_networks < 2) throw usage("--n must be at least 2");
  };
  c.run = [&f](const RunConfig& cfg, std::ostream&) {
    NetworkSimConfig sim(spread_bias_mixture(f.components, f.spread));
    sim.depth = f.depth;
    sim.widths = f.widths;
    sim.n_networks = f.n_networks;
    sim.weight_variance = f.weight_variance;
    sim.bias_variance = f.bias_variance;
    sim.seed = cfg.seed;
    sim.validate();
    const auto rows = convergence_report(simulate_wide_network(sim), f.components, cfg.fit.fit);
    write_file_atomic(cfg.out, format_convergence_csv(rows));
    return std::to_string(rows.size()) + " widths simulated";
  };
  return c;
}

}  // namespace

void RunConfig::validate() const {
  hyperparams.validate();
  fit.validate();
}

double as_fraction(double value) { return value > 1.0 ? value / 100.0 : value; }

RunConfig apply_config_text(const std::string& json_text, RunConfig base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw usage(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw usage("config must be a JSON object");
  auto& hp = base.hyperparams;
  auto& fit = base.fit.fit;
  for (const auto& [key, v] : doc.items()) {
    if (key == "u1") hp.u1 = as_fraction(json_real(v, key));
    else if (key == "u2") hp.u2 = as_fraction(json_real(v, key));
    else if (key == "q1") hp.q1 = as_fraction(json_real(v, key));
    else if (key == "q2") hp.q2 = as_fraction(json_real(v, key));
    else if (key == "max_iterations") fit.max_iterations = static_cast<int>(json_integer(v, key));
    else if (key == "convergence_tol") fit.convergence_tol = json_real(v, key);
    else if (key == "covariance_regularizer") fit.covariance_regularizer = json_real(v, key);
    else if (key == "num_restarts") fit.num_restarts = static_cast<int>(json_integer(v, key));
    else if (key == "c_max") base.fit.c_max = json_count(v, key);
    else if (key == "elbow_tol") base.fit.elbow_tol = json_real(v, key);
    else if (key == "min_samples_per_class") {
      if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) base.fit.min_samples_per_class.reset();
      else base.fit.min_samples_per_class = json_count(v, key);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw usage("config key 'seed' must be an unsigned integer");
      base.seed = v.get<std::uint64_t>();
    } else if (key == "train") base.train = json_string(v, key);
    else if (key == "model") base.model = json_string(v, key);
    else if (key == "data") base.data = json_string(v, key);
    else if (key == "out") base.out = json_string(v, key);
    else throw usage("unknown config key '" + key + "'");
  }
  fit.seed = base.seed;
  return base;
}

std::string config_to_json(const RunConfig& config) {
  const auto& hp = config.hyperparams;
  const auto& fit = config.fit.fit;
  json doc = {
      {"u1", hp.u1},
      {"u2", hp.u2},
      {"q1", hp.q1},
      {"q2", hp.q2},
      {"max_iterations", fit.max_iterations},
      {"convergence_tol", fit.convergence_tol},
      {"covariance_regularizer", fit.covariance_regularizer},
      {"num_restarts", fit.num_restarts},
      {"c_max", config.fit.c_max},
      {"elbow_tol", config.fit.elbow_tol},
      {"seed", config.seed},
      {"train", config.train},
      {"model", config.model},
      {"data", config.data},
      {"out", config.out},
  };
  if (config.fit.min_samples_per_class) {
    doc["min_samples_per_class"] = *config.fit.min_samples_per_class;
  } else {
    doc["min_samples_per_class"] = "auto";
  }
  return doc.dump(2);
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logit-based uncertainty: fit, score and diagnose per-class mixtures", "logitunc"};
  app.require_subcommand(1);
  Flags f;

  auto* fit = app.add_subcommand("fit", "fit a model on correctly predicted training logits");
  add_common(fit, f);
  fit->add_option("--train", f.train, "training logit CSV");
  fit->add_option("--u1", f.u1, "uncertainty assigned to the q1 score quantile (default 0.5)");
  fit->add_option("--u2", f.u2, "uncertainty assigned to the q2 score quantile, below u1 (default 0.2)");
  fit->add_option("--q1", f.q1, "score quantile for u1, fraction or percent (default 0.8)");
  fit->add_option("--q2", f.q2, "score quantile for u2, fraction or percent (default 0.6)");
  add_fit_controls(fit, f);
  fit->add_option("--c-max", f.c_max, "largest component count tried (default 5)");
  fit->add_option("--elbow-tol", f.elbow_tol, "relative BIC improvement below which the count stops growing (default 0.01)");
  fit->add_option("--min-samples-per-class", f.min_samples_per_class, "smaller classes stay unfitted (default max(50, 5k))");

  auto* eval = app.add_subcommand("eval", "write per-sample uncertainties");
  add_common(eval, f);
  eval->add_option("--model", f.model, "model JSON written by fit");
  eval->add_option("--data", f.data, "logit CSV to score");

  auto* drift = app.add_subcommand("drift", "KL distance of uncertainty streams to a reference");
  add_common(drift, f);
  drift->add_option("--model", f.model, "model JSON written by fit");
  drift->add_option("--reference", f.reference, "reference logit CSV");
  drift->add_option("--stream", f.streams, "stream logit CSV (repeatable)");
  drift->add_option("--fractions", f.fractions, "row label per stream")->delimiter(',');

  auto* defer = app.add_subcommand("defer", "cost bounds of deferral for two uncertainty reports");
  add_common(defer, f);
  defer->add_option("--a-report", f.a_report, "uncertainty report of method A");
  defer->add_option("--b-report", f.b_report, "uncertainty report of method B");
  defer->add_option("--data", f.data, "logit CSV with the true labels");
  defer->add_option("--thresholds", f.thresholds, "deferral thresholds; u > t is deferred")->delimiter(',');

  auto* diagnose = app.add_subcommand("diagnose", "HDR bound checks per fitted class");
  add_common(diagnose, f);
  diagnose->add_option("--model", f.model, "model JSON written by fit");
  diagnose->add_option("--alpha", f.alpha, "tail mass of the level check")->capture_default_str();
  diagnose->add_option("--n-mc", f.n_mc, "Monte Carlo samples per check")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate-nn", "random wide ReLU networks with a mixture output bias");
  add_common(simulate, f);
  simulate->add_option("--widths", f.widths)->delimiter(',')->capture_default_str();
  simulate->add_option("--depth", f.depth, "hidden layers")->capture_default_str();
  simulate->add_option("--components", f.components, "output-bias mixture components")->capture_default_str();
  simulate->add_option("--n", f.n_networks, "networks per width")->capture_default_str();
  simulate->add_option("--spread", f.spread, "bias component means span [-spread, spread]")->capture_default_str();
  simulate->add_option("--weight-variance", f.weight_variance)->capture_default_str();
  simulate->add_option("--bias-variance", f.bias_variance)->capture_default_str();
  add_fit_controls(simulate, f);

  std::vector<std::string> argv_storage{"logitunc"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Command command;
  std::string name;
  if (fit->parsed()) name = "fit", command = fit_command(f);
  else if (eval->parsed()) name = "eval", command = eval_command(f);
  else if (drift->parsed()) name = "drift", command = drift_command(f);
  else if (defer->parsed()) name = "defer", command = defer_command(f);
  else if (diagnose->parsed()) name = "diagnose", command = diagnose_command(f);
  else name = "simulate-nn", command = simulate_command(f);

  RunConfig cfg;
  try {
    cfg = resolve(f);
    command.check(cfg);
  } catch (const Error& e) {
    err << "logitunc " << name << ": " << e.what() << "\n";
    return 1;
  }

  json echo = config_json(cfg);
  echo["command"] = name;
  for (const auto& [key, v] : command.extras.items()) echo[key] = v;
  out << echo.dump(2) << "\n";

  try {
    const auto summary = command.run(cfg, out);
    out << summary << "\n";
  } catch (const Error& e) {
    err << "logitunc " << name << ": " << e.what() << "\n";
    return e.is_usage_error() ? 1 : 2;
  } catch (const std::exception& e) {
    err << "logitunc " << name << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace logitunc::cli
