// Microbenchmarks for the streaming hot paths: window aggregation, the two
// reconstruction losses, detector steps, correlation ranking, fused-sample
// assembly, and forecaster forward/backward passes.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "flowcast/autoencoder.hpp"
#include "flowcast/correlation.hpp"
#include "flowcast/fpd.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/rng.hpp"
#include "flowcast/series.hpp"
#include "flowcast/synthetic.hpp"

namespace {

using namespace flowcast;

Eigen::VectorXd random_simplex(std::mt19937_64& rng, int bins) {
  Eigen::VectorXd v(bins);
  for (int i = 0; i < bins; ++i) v[i] = uniform01(rng) + 1e-12;
  return v / v.sum();
}

Dataset bench_dataset(int n_sensors, int n_steps) {
  SyntheticSpec spec;
  spec.n_sensors = n_sensors;
  spec.n_steps = n_steps;
  spec.seed = 1;
  spec.noise_sigma = 2.0;
  return generate_synthetic(spec);
}

void BM_AggregateWindow(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<double> window(12);
  for (double& v : window) v = uniform01(rng) * 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate_window(window));
  }
}
BENCHMARK(BM_AggregateWindow);

void BM_FpdStream(benchmark::State& state) {
  const Dataset ds = bench_dataset(1, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fpd_stream(ds.series[0], FpdConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FpdStream)->Arg(288)->Arg(2880);

void BM_ReconstructionLoss(benchmark::State& state) {
  std::mt19937_64 rng(11);
  const Eigen::VectorXd a = random_simplex(rng, 12);
  const Eigen::VectorXd b = random_simplex(rng, 12);
  const LossKind kind = state.range(0) ? LossKind::emd : LossKind::rmse;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reconstruction_loss(kind, a, b));
  }
}
BENCHMARK(BM_ReconstructionLoss)->Arg(0)->Arg(1);

void BM_DetectorStep(benchmark::State& state) {
  std::mt19937_64 rng(13);
  DetectorConfig cfg;
  cfg.loss = state.range(0) ? LossKind::emd : LossKind::rmse;
  cfg.seed = 5;
  OnlineDetector detector(12, cfg);
  Fpd fpd;
  fpd.sensor = synthetic_sensor_id(0);
  std::vector<Eigen::VectorXd> inputs;
  for (int i = 0; i < 64; ++i) inputs.push_back(random_simplex(rng, 12));
  std::size_t i = 0;
  for (auto _ : state) {
    const Eigen::VectorXd& in = inputs[i++ % inputs.size()];
    fpd.probs.assign(in.data(), in.data() + in.size());
    benchmark::DoNotOptimize(detector.process(fpd));
  }
}
BENCHMARK(BM_DetectorStep)->Arg(0)->Arg(1);

void BM_Pearson(benchmark::State& state) {
  std::mt19937_64 rng(17);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = uniform01(rng);
    y[i] = 0.5 * x[i] + uniform01(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pearson(x, y));
  }
}
BENCHMARK(BM_Pearson)->Arg(168)->Arg(1024);

void BM_BuildSamples(benchmark::State& state) {
  const Dataset ds = bench_dataset(8, 2880);
  CorrelationWeightMap wm;
  wm.target = ds.series[0].id;
  wm.theta = 0.5;
  wm.k = 4;
  for (int i = 1; i <= 4; ++i) {
    NeighborWeight nw;
    nw.neighbor = ds.series[i].id;
    nw.r = 0.5;
    nw.weight = 0.5;
    nw.selected = true;
    wm.entries.push_back(nw);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_samples(ds, wm));
  }
  state.SetItemsProcessed(state.iterations() * 2868);
}
BENCHMARK(BM_BuildSamples);

void BM_ForecasterForward(benchmark::State& state) {
  const int input_dim = static_cast<int>(state.range(0));
  const LstmParams params = LstmParams::init(input_dim, 32, 3);
  std::mt19937_64 rng(19);
  Eigen::MatrixXd x(kWindowSteps, input_dim);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lstm_forward(params, x));
  }
}
BENCHMARK(BM_ForecasterForward)->Arg(1)->Arg(11);

void BM_ForecasterGradBatch(benchmark::State& state) {
  const int input_dim = 11;
  const LstmParams params = LstmParams::init(input_dim, 32, 3);
  std::mt19937_64 rng(23);
  std::vector<Eigen::MatrixXd> xs;
  Eigen::VectorXd ys(32);
  for (int b = 0; b < 32; ++b) {
    Eigen::MatrixXd x(kWindowSteps, input_dim);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng);
    xs.push_back(x);
    ys[b] = uniform01(rng);
  }
  LstmParams grad = params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lstm_loss_and_grad(params, xs, ys, &grad));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForecasterGradBatch);

}  // namespace

BENCHMARK_MAIN();
