#include <benchmark/benchmark.h>

#include "msurr/model/simulation.hpp"
#include "msurr/sampling/sampling.hpp"

using namespace msurr;

namespace {

model::ScenarioParams scenario() {
  auto s = sampling::sample_scenarios(1, 6, 21).front();
  s.eir0 = 30.0;
  return s;
}

// One simulated year for a calibrated, warmed-up population (setup excluded).
void BM_SimulateYear(benchmark::State& state) {
  model::SimConfig config;
  config.population = static_cast<std::size_t>(state.range(0));
  const auto site = model::site_from_scenario(scenario());
  const auto start = model::initial_population(site, config);
  const auto calibration = model::calibrate_k0(site, config, start);
  model::Simulation sim(start, site, config.params, calibration.k0, 5);
  for (auto _ : state) {
    sim.distribute_nets(0.3);
    for (int d = 0; d < model::kDaysPerYear; ++d) benchmark::DoNotOptimize(sim.step_day().eir);
  }
  state.SetItemsProcessed(state.iterations() * model::kDaysPerYear);
}
BENCHMARK(BM_SimulateYear)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

// End to end: calibration, three warm-up years and a six-year scenario.
void BM_RunScenario(benchmark::State& state) {
  model::SimConfig config;
  const auto s = scenario();
  for (auto _ : state) benchmark::DoNotOptimize(model::run_simulation(s, 6, config));
}
BENCHMARK(BM_RunScenario)->Iterations(2)->Unit(benchmark::kMillisecond);

}  // namespace
