#include <benchmark/benchmark.h>

#include "logitunc/diagnostics.hpp"
#include "logitunc/gmm.hpp"
#include "logitunc/synthetic.hpp"
#include "logitunc/uncertainty_model.hpp"

using namespace logitunc;

namespace {

PointMatrix points(const RecordSet& records) {
  PointMatrix out(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(records.num_classes));
  for (std::size_t i = 0; i < records.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = records.records[i].logits.transpose();
  return out;
}

void BM_EmFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = points(synthetic::correct_records(synthetic::axis_means(3), n, 11));
  FitConfig cfg;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(data, static_cast<std::size_t>(state.range(1)), cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.rows()));
}
BENCHMARK(BM_EmFit)->Args({500, 1})->Args({500, 3})->Args({2000, 3})->Unit(benchmark::kMillisecond);

void BM_LogDensity(benchmark::State& state) {
  const auto data = points(synthetic::correct_records(synthetic::axis_means(3), 1000, 12));
  FitConfig cfg;
  const auto model = em_fit(data, static_cast<std::size_t>(state.range(0)), cfg);
  Eigen::Index row = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_density(model, data.row(row).transpose()));
    row = (row + 1) % data.rows();
  }
}
BENCHMARK(BM_LogDensity)->Arg(1)->Arg(3)->Arg(5);

void BM_BatchPredict(benchmark::State& state) {
  const auto means = synthetic::axis_means(3);
  ModelFitOptions opts;
  const auto model = fit_uncertainty_model(synthetic::correct_records(means, 1000, 13), Hyperparams{}, opts);
  const auto records = synthetic::labelled_records(means, static_cast<std::size_t>(state.range(0)), 14);
  for (auto _ : state) benchmark::DoNotOptimize(batch_predict(model, records));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_BatchPredict)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SimulateWideNetwork(benchmark::State& state) {
  NetworkSimConfig cfg(spread_bias_mixture(2));
  cfg.widths = {static_cast<std::size_t>(state.range(0))};
  cfg.n_networks = 200;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_wide_network(cfg));
}
BENCHMARK(BM_SimulateWideNetwork)->Arg(32)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
