#pragma once

#include <string_view>

#include <Eigen/Core>

namespace msurr::surrogate {

enum class LossKind { Mse, LogCosh };

std::string_view to_string(LossKind kind);
LossKind loss_from_string(std::string_view name);

/// log(cosh x) as |x| + log1p(exp(-2|x|)) - log 2, finite for any finite x.
double log_cosh(double x);

/// Mean elementwise loss over entries whose target is finite (NaN targets
/// mark missing days and are skipped). When `grad` is given it receives
/// dLoss/dpred with the same shape. Returns NaN when no entry is finite.
double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target, LossKind kind,
            Eigen::MatrixXd* grad = nullptr);

}  // namespace msurr::surrogate
