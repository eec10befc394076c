#pragma once

#include <string_view>

#include <Eigen/Core>

namespace msurr::surrogate {

enum class OptimizerKind { Adam, RmsProp };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;     // Adam
  double beta2 = 0.999;   // Adam
  double rho = 0.9;       // RMSProp
  double epsilon = 1e-8;

  void validate() const;
};

/// Adam:    m ← β1 m + (1-β1) g,  v ← β2 v + (1-β2) g²,
///          θ ← θ - lr m̂ / (√v̂ + ε) with bias-corrected m̂, v̂.
/// RMSProp: v ← ρ v + (1-ρ) g²,  θ ← θ - lr g / (√v + ε).
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, Eigen::Index size);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);
  long steps() const { return t_; }

 private:
  OptimizerConfig config_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

/// Rescale `grad` so its Euclidean norm is at most `max_norm` (no-op for
/// max_norm <= 0). Returns the norm before clipping.
double clip_by_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace msurr::surrogate
