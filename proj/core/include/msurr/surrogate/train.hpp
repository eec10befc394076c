#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msurr/sampling/sampling.hpp"
#include "msurr/surrogate/loss.hpp"
#include "msurr/surrogate/model.hpp"
#include "msurr/surrogate/optimizer.hpp"

namespace msurr::surrogate {

struct TrainConfig {
  OptimizerConfig optimizer;
  LossKind loss = LossKind::LogCosh;
  int batch_size = 100;
  double dropout = 0.0;
  int epochs = 100;
  std::uint64_t seed = 42;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables
  CellType cell = CellType::Lstm;
  int hidden1 = 383;
  int hidden2 = 365;
  FeatureConfig features;
  /// Called after every epoch (and once for epoch 0, before training).
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
  std::string summary() const;
};

/// Features and raw targets of one dataset split, ready for batching.
struct PreparedSplit {
  std::vector<Eigen::MatrixXd> inputs;   // standardized, dim x years
  std::vector<Eigen::MatrixXd> targets;  // 365 x years, NaN for missing days
};

struct TrainResult {
  SurrogateModel model;         // weights of the best validation epoch
  double baseline_val_mse = 0.0;  // untrained network
  double best_val_mse = 0.0;
};

/// Fit the standardizer on the train split, then run mini-batch training,
/// keeping the weights with the lowest validation loss. Throws DomainError
/// when the loss becomes NaN.
TrainResult train(const sampling::Dataset& dataset, const TrainConfig& config);

/// Network predictions for every record of a split, in split order.
std::vector<Trajectory> predict_split(const SurrogateModel& model, const sampling::Dataset& dataset,
                                      sampling::Split split, int chunk = 100);

/// Un-normalized errors over the chosen records (all when `indices` is empty).
ErrorSummary evaluate(const SurrogateModel& model, const sampling::Dataset& dataset,
                      const std::vector<std::size_t>& indices = {});

/// Target matrix (365 x years) of a simulation output.
Trajectory target_of(const model::SimOutput& output);

struct GridPoint {
  TrainConfig config;
  double val_mse = 0.0;
};

/// Candidate values for the grid search; every combination is trained.
struct Grid {
  std::vector<OptimizerKind> optimizers{OptimizerKind::Adam, OptimizerKind::RmsProp};
  std::vector<LossKind> losses{LossKind::Mse, LossKind::LogCosh};
  std::vector<int> batch_sizes{1000, 100, 50};
  std::vector<double> dropouts{0.0, 0.1};
  std::vector<CellType> cells{CellType::Lstm, CellType::Gru};
};

/// Train every grid combination from `base`; results sorted by validation MSE.
std::vector<GridPoint> grid_search(const sampling::Dataset& dataset, const TrainConfig& base, const Grid& grid);

}  // namespace msurr::surrogate
