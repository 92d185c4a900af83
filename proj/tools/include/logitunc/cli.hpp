#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "logitunc/calibration.hpp"
#include "logitunc/uncertainty_model.hpp"

namespace logitunc::cli {

/// Everything a run is parameterized by. Resolution order is built-in
/// defaults, then the --config file, then individual flags.
struct RunConfig {
  Hyperparams hyperparams;
  ModelFitOptions fit;
  std::uint64_t seed = 0;
  std::string train;
  std::string model;
  std::string data;
  std::string out;

  void validate() const;
};

/// Hyperparameters above 1 are read as percentages: 80 -> 0.8.
double as_fraction(double value);

/// Overlays the keys of a JSON config document onto `base`. Unknown keys and
/// ill-typed values are usage errors (InvalidArgument).
RunConfig apply_config_text(const std::string& json_text, RunConfig base);

std::string config_to_json(const RunConfig& config);

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on usage errors and 2 on data or model errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace logitunc::cli
