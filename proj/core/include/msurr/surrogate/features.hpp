#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "msurr/model/params.hpp"

namespace msurr::surrogate {

/// Per-step input: the year's rainfall profile R(d/365), d = 1..resolution
/// (resolution evenly spaced points over the year), then κ1, κ2, κ3, μ_a, Λ₀
/// and the year's ITN usage.
struct FeatureConfig {
  int rainfall_resolution = 365;

  static constexpr int kScalars = 6;
  int dim() const { return rainfall_resolution + kScalars; }
  int kappa_index(int v) const { return rainfall_resolution + v; }
  int mean_age_index() const { return rainfall_resolution + 3; }
  int eir_index() const { return rainfall_resolution + 4; }
  int nu_index() const { return rainfall_resolution + 5; }
};

/// dim() x years matrix, one column per year. Usage beyond the scenario's
/// knots holds the last knot (0 when there are none).
Eigen::MatrixXd featurize(const model::ScenarioParams& scenario, int years, const FeatureConfig& config = {});

/// Column-wise standardization fit on training features (population
/// convention: divide by the square root of the mean squared deviation).
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<int> constant_features;  // given scale 1

  bool fitted() const { return mean.size() > 0; }
  int dim() const { return static_cast<int>(mean.size()); }

  /// Fit over every column of every sequence. Needs at least two sequences.
  static Standardizer fit(std::span<const Eigen::MatrixXd> sequences);

  void apply_inplace(Eigen::MatrixXd& features) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
  Eigen::MatrixXd unapply(const Eigen::MatrixXd& standardized) const;
};

}  // namespace msurr::surrogate
