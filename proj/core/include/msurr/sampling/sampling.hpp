#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msurr/io/usage.hpp"
#include "msurr/model/params.hpp"
#include "msurr/model/simulation.hpp"

namespace msurr::sampling {

/// Number of time-invariant scenario coordinates: Λ₀, μ_a, g0..g3, h1..h3,
/// κ1..κ3. A scenario with n years of ITN usage needs kStaticDims + n.
inline constexpr int kStaticDims = 12;

/// count x dims Latin hypercube on [0,1)^dims: in every column, exactly one
/// value falls in each stratum [k/count, (k+1)/count).
Eigen::MatrixXd latin_hypercube(int count, int dims, std::uint64_t seed);

struct MarginOptions {
  bool log_eir = false;  // sample Λ₀ log-uniformly over [0.05, 500] instead of uniformly
};

/// Map a unit-cube point to a scenario. Coordinates, in order: Λ₀, μ_a, g0,
/// g1, g2, g3, h1, h2, h3, κ1, κ2, κ3, then one ν per year. κ is the
/// normalized triple (equal thirds if all three are zero); Λ₀ is floored at
/// the domain's open lower bound.
model::ScenarioParams transform_margins(std::span<const double> point, int years, const MarginOptions& options = {});

/// Step function on yearly knots, holding the last knot (zeros when empty).
std::vector<double> expand_nu(std::span<const double> knots, int years);

/// `count` LHS scenarios with `years` usage knots each, ids s00000...
std::vector<model::ScenarioParams> sample_scenarios(int count, int years, std::uint64_t seed,
                                                    const MarginOptions& options = {});

/// LHS over the time-invariant margins; ν is a contiguous `years` window of a
/// randomly chosen historic usage table starting at a random year (holding
/// the last value past its end), clamped to the scenario bound.
std::vector<model::ScenarioParams> sample_historic_scenarios(int count, int years,
                                                             std::span<const io::UsageTable> tables,
                                                             std::uint64_t seed, const MarginOptions& options = {});

enum class Split { Train, Validation };

struct Failure {
  std::string id;
  std::string message;
};

struct Provenance {
  std::string generator = "msurr-sampling 1";
  std::string variant = "lhs";  // lhs | historic
  std::uint64_t seed = 0;
  int count = 0;                // scenarios requested
  int years = 0;
  std::size_t population = 0;
  int warmup_years = 0;
  double train_fraction = 0.8;
  bool log_eir = false;
};

/// Simulated scenarios with their outputs and split labels. Scenarios whose
/// simulation failed are listed in `failures` and absent from the others.
struct Dataset {
  Provenance provenance;
  std::vector<model::ScenarioParams> scenarios;
  std::vector<model::SimOutput> outputs;
  std::vector<Split> split;
  std::vector<Failure> failures;

  std::size_t size() const { return scenarios.size(); }
  bool partial() const { return !failures.empty(); }
  std::vector<std::size_t> indices(Split which) const;
  /// FNV-1a over the serialized scenarios, outputs, split and failures.
  std::string digest() const;
};

struct GenerateOptions {
  double train_fraction = 0.8;
  unsigned threads = 0;  // 0: hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Per-scenario simulation seed; independent of worker count and order.
std::uint64_t scenario_seed(std::uint64_t seed, std::size_t index);

/// Simulate every scenario for `years` years (in parallel) and assign the
/// first ceil(train_fraction * count) positions of a seeded shuffle to train.
Dataset run_scenarios(std::vector<model::ScenarioParams> scenarios, int years, const model::SimConfig& config,
                      std::uint64_t seed, const GenerateOptions& options = {});

/// LHS design of `count` >= 5 scenarios, simulated.
Dataset generate_dataset(int count, int years, const model::SimConfig& config, std::uint64_t seed,
                         const GenerateOptions& options = {}, const MarginOptions& margins = {});

/// Benchmark library with historic ITN usage; every record is validation.
Dataset historic_benchmark(int count, int years, std::span<const io::UsageTable> tables,
                           const model::SimConfig& config, std::uint64_t seed, GenerateOptions options = {},
                           const MarginOptions& margins = {});

/// Directory layout: manifest.txt (provenance, split, failures, digest),
/// scenarios.txt and outputs.txt in their versioned text formats. The
/// directory is written under a temporary name and renamed into place.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
/// Loads and verifies the recorded digest.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace msurr::sampling
