#include "msurr/surrogate/optimizer.hpp"

#include <cmath>
#include <string>

#include "msurr/error.hpp"

namespace msurr::surrogate {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "rmsprop"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "adam" || name == "Adam") return OptimizerKind::Adam;
  if (name == "rmsprop" || name == "RMSProp") return OptimizerKind::RmsProp;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected adam or rmsprop)");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(rho >= 0.0 && rho < 1.0)) {
    throw ConfigError("optimizer decay rates must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("optimizer epsilon must be positive");
}

Optimizer::Optimizer(const OptimizerConfig& config, Eigen::Index size)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
  config.validate();
}

void Optimizer::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) throw ConfigError("optimizer size mismatch");
  ++t_;
  const auto& c = config_;
  if (c.kind == OptimizerKind::Adam) {
    m_ = c.beta1 * m_ + (1.0 - c.beta1) * grad;
    v_ = c.beta2 * v_ + (1.0 - c.beta2) * grad.cwiseAbs2();
    const double mc = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
    const double vc = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
    theta.array() -= c.learning_rate * (m_.array() / mc) / ((v_.array() / vc).sqrt() + c.epsilon);
  } else {
    v_ = c.rho * v_ + (1.0 - c.rho) * grad.cwiseAbs2();
    theta.array() -= c.learning_rate * grad.array() / (v_.array().sqrt() + c.epsilon);
  }
}

double clip_by_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace msurr::surrogate
