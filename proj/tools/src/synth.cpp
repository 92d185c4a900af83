// Writes Gaussian logit CSVs for trying the pipeline without a trained model.
#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <numbers>

#include "logitunc/data_io.hpp"
#include "logitunc/error.hpp"
#include "logitunc/random.hpp"
#include "logitunc/synthetic.hpp"

using namespace logitunc;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic logit generator: class i ~ N(separation * e_i, I)", "logitunc-synth"};
  std::size_t classes = 2;
  std::size_t n = 1000;
  double separation = 4.0;
  double rotate_degrees = 0.0;
  double contamination = 1.0;
  bool correct_only = false;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--classes", classes)->capture_default_str();
  app.add_option("-n,--n", n, "rows per class")->capture_default_str();
  app.add_option("--separation", separation)->capture_default_str();
  app.add_option("--rotate-degrees", rotate_degrees, "rotate all class means about their centroid")
      ->capture_default_str();
  app.add_option("--contamination", contamination, "share of each class drawn from the rotated means; the rest uses the original means")
      ->capture_default_str();
  app.add_flag("--correct-only", correct_only, "redraw until the argmax matches the class");
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  try {
    if (!(contamination >= 0.0 && contamination <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "--contamination must lie in [0, 1]");
    }
    const auto means = synthetic::axis_means(classes, separation);
    const auto rotated = synthetic::rotate_about_centroid(means, rotate_degrees * std::numbers::pi / 180.0);
    const auto n_rotated = static_cast<std::size_t>(std::llround(contamination * static_cast<double>(n)));
    const auto draw = [&](const std::vector<Vector>& m, std::size_t count, std::uint64_t s) {
      return correct_only ? synthetic::correct_records(m, count, s) : synthetic::labelled_records(m, count, s);
    };
    auto set = draw(means, n - n_rotated, derive_seed(seed, 0));
    const auto extra = draw(rotated, n_rotated, derive_seed(seed, 1));
    set.records.insert(set.records.end(), extra.records.begin(), extra.records.end());
    save_logit_records(set, out);
  } catch (const Error& e) {
    std::cerr << "logitunc-synth: " << e.what() << "\n";
    return e.is_usage_error() ? 1 : 2;
  }
  return 0;
}
