#include <vector>

#include <benchmark/benchmark.h>

#include "msurr/sampling/sampling.hpp"
#include "msurr/surrogate/model.hpp"

using namespace msurr;

namespace {

// Full-size network with random weights; timing does not depend on training.
const surrogate::SurrogateModel& full_size_model() {
  static const surrogate::SurrogateModel model = [] {
    surrogate::SurrogateModel m;
    const auto scenarios = sampling::sample_scenarios(50, 6, 3);
    std::vector<Eigen::MatrixXd> features;
    for (const auto& s : scenarios) features.push_back(surrogate::featurize(s, 6, m.features));
    m.standardizer = surrogate::Standardizer::fit(features);
    surrogate::NetworkShape shape;
    shape.input = m.features.dim();
    m.network = surrogate::Network::initialized(shape, 7);
    return m;
  }();
  return model;
}

model::ScenarioParams scenario(int years) { return sampling::sample_scenarios(1, years, 11).front(); }

void BM_PredictFloat(benchmark::State& state) {
  const int years = static_cast<int>(state.range(0));
  const surrogate::Predictor predictor(full_size_model());
  const auto s = scenario(years);
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict(s, years));
}
BENCHMARK(BM_PredictFloat)->Arg(6)->Arg(18)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_PredictDouble(benchmark::State& state) {
  const int years = static_cast<int>(state.range(0));
  const auto s = scenario(years);
  for (auto _ : state) benchmark::DoNotOptimize(surrogate::predict(full_size_model(), s, years));
}
BENCHMARK(BM_PredictDouble)->Arg(6)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_PredictBatchFloat(benchmark::State& state) {
  const auto batch = static_cast<int>(state.range(0));
  const surrogate::Predictor predictor(full_size_model());
  const auto scenarios = sampling::sample_scenarios(batch, 6, 12);
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict_batch(scenarios, 6));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_PredictBatchFloat)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

// One training step's worth of network work: forward with cache + backward.
void BM_ForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<int>(state.range(0));
  const int years = 6;
  const auto& m = full_size_model();
  const auto scenarios = sampling::sample_scenarios(batch, years, 13);
  const Eigen::MatrixXd x = surrogate::network_input(m, scenarios, years);
  surrogate::Network::Cache cache;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.network.parameters().size());
  for (auto _ : state) {
    const auto& y = m.network.forward(x, years, cache);
    m.network.backward(cache, y, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

// Log-posterior gradient work per HMC leapfrog step: B chains in lockstep.
template <surrogate::Precision P>
void BM_EirSensitivity(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const int years = 18;
  surrogate::EirSensitivity sens(full_size_model(), scenario(years), years, P);
  std::vector<double> eir(batch);
  for (std::size_t b = 0; b < batch; ++b) eir[b] = 5.0 + 20.0 * static_cast<double>(b);
  std::vector<surrogate::Trajectory> d(batch, surrogate::Trajectory::Constant(365, years, 1e-3));
  for (auto _ : state) {
    sens.evaluate(eir);
    benchmark::DoNotOptimize(sens.eir_gradient(d));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch));
}
BENCHMARK(BM_EirSensitivity<surrogate::Precision::Single>)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EirSensitivity<surrogate::Precision::Double>)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
