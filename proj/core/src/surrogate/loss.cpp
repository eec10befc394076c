#include "msurr/surrogate/loss.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "msurr/error.hpp"

namespace msurr::surrogate {

std::string_view to_string(LossKind kind) { return kind == LossKind::Mse ? "mse" : "logcosh"; }

LossKind loss_from_string(std::string_view name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "logcosh" || name == "log-cosh" || name == "log_cosh") return LossKind::LogCosh;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected mse or logcosh)");
}

double log_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target, LossKind kind, Eigen::MatrixXd* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ConfigError("loss shape mismatch");
  double sum = 0.0;
  Eigen::Index count = 0;
  if (grad) grad->setZero(pred.rows(), pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double y = target(i, j);
      if (!std::isfinite(y)) continue;
      const double r = pred(i, j) - y;
      ++count;
      if (kind == LossKind::Mse) {
        sum += r * r;
        if (grad) (*grad)(i, j) = 2.0 * r;
      } else {
        sum += log_cosh(r);
        if (grad) (*grad)(i, j) = std::tanh(r);
      }
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  if (grad) *grad /= static_cast<double>(count);
  return sum / static_cast<double>(count);
}

}  // namespace msurr::surrogate
