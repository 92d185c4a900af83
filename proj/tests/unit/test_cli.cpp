#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "logitunc/cli.hpp"
#include "logitunc/data_io.hpp"
#include "logitunc/error.hpp"
#include "logitunc/synthetic.hpp"

using namespace logitunc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() / "logitunc_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto means = synthetic::axis_means(2);
    save_logit_records(synthetic::correct_records(means, 400, 1), path("train.csv"));
    save_logit_records(synthetic::labelled_records(means, 200, 2), path("test.csv"));
    save_logit_records(
        synthetic::labelled_records(synthetic::rotate_about_centroid(means, 1.5707963267948966), 200, 3),
        path("ood.csv"));
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const Workspace& ws() {
  static const Workspace w;
  return w;
}

}  // namespace

TEST_CASE("percentages become fractions") {
  CHECK(cli::as_fraction(80) == 0.8);
  CHECK(cli::as_fraction(0.6) == 0.6);
  CHECK(cli::as_fraction(1.0) == 1.0);
}

TEST_CASE("config overlay") {
  const auto cfg = cli::apply_config_text(R"({"q1": 90, "q2": 0.7, "c_max": 3, "seed": 18446744073709551615})",
                                          cli::RunConfig{});
  CHECK(cfg.hyperparams.q1 == 0.9);
  CHECK(cfg.hyperparams.q2 == 0.7);
  CHECK(cfg.fit.c_max == 3);
  CHECK(cfg.seed == 18446744073709551615ull);
  CHECK(cfg.fit.fit.seed == cfg.seed);

  CHECK_THROWS_AS(cli::apply_config_text(R"({"q3": 1})", cli::RunConfig{}), Error);
  CHECK_THROWS_AS(cli::apply_config_text(R"({"c_max": "three"})", cli::RunConfig{}), Error);
  CHECK_THROWS_AS(cli::apply_config_text(R"({"seed": -1})", cli::RunConfig{}), Error);
  CHECK_THROWS_AS(cli::apply_config_text("{", cli::RunConfig{}), Error);

  const auto echoed = cli::config_to_json(cfg);
  const auto back = cli::apply_config_text(echoed, cli::RunConfig{});
  CHECK(cli::config_to_json(back) == echoed);
}

TEST_CASE("fit then eval") {
  const auto model = ws().path("model.json");
  const auto fit = run({"fit", "--train", ws().path("train.csv"), "--out", model, "--q1", "80", "--q2", "60"});
  REQUIRE(fit.code == 0);
  CHECK(fit.out.find("\"q1\": 0.8") != std::string::npos);
  CHECK(fit.out.find("\"command\": \"fit\"") != std::string::npos);
  CHECK(load_model(model).fitted_count() == 2);

  const auto report = ws().path("report.csv");
  const auto eval = run({"eval", "--model", model, "--data", ws().path("test.csv"), "--out", report});
  REQUIRE(eval.code == 0);
  CHECK(load_uncertainty_report(report).size() == 400);

  const auto ood_report = ws().path("ood_report.csv");
  REQUIRE(run({"eval", "--model", model, "--data", ws().path("ood.csv"), "--out", ood_report}).code == 0);

  SUBCASE("drift") {
    const auto out = ws().path("drift.csv");
    const auto r = run({"drift", "--model", model, "--reference", ws().path("test.csv"), "--stream",
                        ws().path("test.csv"), "--stream", ws().path("ood.csv"), "--fractions", "0,1", "--out", out});
    REQUIRE(r.code == 0);
    const auto text = read_file(out);
    CHECK(text.rfind("fraction,kl\n0,0\n1,", 0) == 0);
    CHECK(run({"drift", "--model", model, "--reference", ws().path("test.csv"), "--stream", ws().path("ood.csv"),
               "--fractions", "0,1", "--out", out})
              .code == 1);
  }
  SUBCASE("defer") {
    const auto out = ws().path("defer.csv");
    const auto r = run({"defer", "--a-report", report, "--b-report", report, "--data", ws().path("test.csv"),
                        "--thresholds", "0.2,0.5,0.8", "--out", out});
    REQUIRE(r.code == 0);
    const auto text = read_file(out);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(run({"defer", "--a-report", report, "--b-report", ood_report, "--data", ws().path("test.csv"),
               "--thresholds", "1.5", "--out", out})
              .code == 1);
  }
  SUBCASE("diagnose") {
    const auto out = ws().path("diag.csv");
    const auto r = run({"diagnose", "--model", model, "--alpha", "0.1", "--n-mc", "5000", "--out", out});
    REQUIRE(r.code == 0);
    const auto text = read_file(out);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
    CHECK(text.find("0,level,0.9") != std::string::npos);
  }
}

TEST_CASE("simulate-nn") {
  const auto out = ws().path("sim.csv");
  const auto r = run({"simulate-nn", "--widths", "4,16", "--depth", "2", "--components", "2", "--n", "300", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"widths\"") != std::string::npos);
  const auto text = read_file(out);
  CHECK(text.rfind("width,n,components,ks_statistic,bic_single,bic_mixture\n4,300,2,", 0) == 0);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"fit", "--out", ws().path("m.json")}).code == 1);

  const auto bad = run({"fit", "--train", ws().path("train.csv"), "--out", ws().path("m.json"), "--u1", "0.2", "--u2", "0.5"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("u2 < u1") != std::string::npos);
  CHECK(bad.out.empty());
  CHECK(!fs::exists(ws().path("m.json")));

  CHECK(run({"eval", "--model", ws().path("missing.json"), "--data", ws().path("test.csv"), "--out",
             ws().path("r.csv")})
            .code == 2);
  CHECK(run({"fit", "--train", ws().path("train.csv"), "--out", ws().path("m.json"), "--seed", "-4"}).code == 1);
  CHECK(run({"fit", "--config", ws().path("nope.json"), "--train", ws().path("train.csv"), "--out", ws().path("m.json")})
            .code == 1);
  CHECK(run({"--help"}).code == 0);

  write_file_atomic(ws().path("bad.csv"), "logit_0,logit_1,label,pred\n2.0,-1.0,0,1\n");
  const auto mismatch = run({"fit", "--train", ws().path("bad.csv"), "--out", ws().path("m.json")});
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("PredictionMismatch") != std::string::npos);
}

TEST_CASE("config file drives the run") {
  write_file_atomic(ws().path("cfg.json"), R"({"q1": 85, "q2": 55, "c_max": 2, "seed": 5})");
  const auto model = ws().path("cfg_model.json");
  const auto r = run({"fit", "--config", ws().path("cfg.json"), "--train", ws().path("train.csv"), "--out", model,
                      "--q2", "50"});
  REQUIRE(r.code == 0);
  const auto m = load_model(model);
  CHECK(m.hyperparams.q1 == 0.85);
  CHECK(m.hyperparams.q2 == 0.5);
  CHECK(r.out.find("\"seed\": 5") != std::string::npos);
}
