#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msurr/model/params.hpp"
#include "msurr/surrogate/features.hpp"
#include "msurr/surrogate/network.hpp"

namespace msurr::surrogate {

struct EpochRecord {
  int epoch = 0;          // 0: before the first update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mse = 0.0;
  double seconds = 0.0;   // cumulative wall time
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  int best_epoch = 0;
  std::string settings;     // one-line summary of the training configuration
  std::string data_digest;  // digest of the dataset it was trained on
  std::vector<EpochRecord> history;
};

/// Trained surrogate: featurization, input standardizer and network.
struct SurrogateModel {
  FeatureConfig features;
  Standardizer standardizer;
  Network network;
  TrainingMeta meta;

  void validate() const;
};

/// Trajectories are 365 x years matrices, one column per year.
using Trajectory = Eigen::MatrixXd;

/// Standardized, time-major network input for a batch of scenarios.
Eigen::MatrixXd network_input(const SurrogateModel& model, std::span<const model::ScenarioParams> scenarios,
                              int years);

/// Split time-major network output back into per-scenario trajectories.
std::vector<Trajectory> split_output(const Eigen::MatrixXd& output, int years);

Trajectory predict(const SurrogateModel& model, const model::ScenarioParams& scenario, int years);
std::vector<Trajectory> predict_batch(const SurrogateModel& model, std::span<const model::ScenarioParams> scenarios,
                                      int years);

/// Single-precision copy of a model for fast serving. Agrees with predict()
/// to about 1e-5; batch and single calls share one code path.
class Predictor {
 public:
  explicit Predictor(const SurrogateModel& model);

  Trajectory predict(const model::ScenarioParams& scenario, int years) const;
  std::vector<Trajectory> predict_batch(std::span<const model::ScenarioParams> scenarios, int years) const;

 private:
  FeatureConfig features_;
  Standardizer standardizer_;
  FloatNetwork network_;
};

enum class Precision { Double, Single };

/// Trajectories of one scenario as a function of Λ₀ for a batch of Λ₀
/// values at once, with reverse-mode sensitivities dL/dΛ₀. Only the Λ₀
/// feature varies, so the first layer's input projection is precomputed and
/// updated by a rank-one term. Not thread-safe; use one instance per thread.
class EirSensitivity {
 public:
  EirSensitivity(const SurrogateModel& model, model::ScenarioParams scenario, int years,
                 Precision precision = Precision::Double);
  ~EirSensitivity();
  EirSensitivity(EirSensitivity&&) noexcept;
  EirSensitivity& operator=(EirSensitivity&&) noexcept;

  int years() const { return years_; }

  /// Predicted trajectories at each Λ₀ value.
  const std::vector<Trajectory>& evaluate(std::span<const double> eir0);
  /// dL/dΛ₀ for each entry of the last evaluate(), given dL/dtrajectory.
  std::vector<double> eir_gradient(std::span<const Trajectory> d_trajectory) const;

  const Trajectory& evaluate(double eir0) { return evaluate(std::span<const double>(&eir0, 1)).front(); }
  double eir_gradient(const Trajectory& d_trajectory) const {
    return eir_gradient(std::span<const Trajectory>(&d_trajectory, 1)).front();
  }

 private:
  struct Impl;
  template <class S>
  struct Kernel;
  std::unique_ptr<Impl> impl_;
  int years_;
};

struct ErrorSummary {
  double mse = 0.0;                 // over every finite target entry
  std::vector<double> per_sample;
  std::vector<double> per_year;
  double fraction_below_1e2 = 0.0;  // samples with MSE < 1e-2
  double fraction_below_1e3 = 0.0;
  std::size_t samples = 0;
};

/// Un-normalized prevalence errors of predictions against targets.
ErrorSummary summarize_errors(std::span<const Trajectory> predictions, std::span<const Trajectory> targets);

}  // namespace msurr::surrogate
