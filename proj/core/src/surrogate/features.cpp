#include "msurr/surrogate/features.hpp"

#include <algorithm>
#include <cmath>

#include "msurr/error.hpp"
#include "msurr/model/rainfall.hpp"

namespace msurr::surrogate {

Eigen::MatrixXd featurize(const model::ScenarioParams& s, int years, const FeatureConfig& config) {
  if (years < 1) throw ConfigError("years must be at least 1");
  if (config.rainfall_resolution < 1) throw ConfigError("rainfall resolution must be positive");
  const int n = config.rainfall_resolution;
  Eigen::MatrixXd x(config.dim(), years);
  for (int d = 0; d < n; ++d) {
    x(d, 0) = model::rainfall(s.rainfall, static_cast<double>(d + 1) / n);
  }
  for (int v = 0; v < model::kSpecies; ++v) x(config.kappa_index(v), 0) = s.kappa[v];
  x(config.mean_age_index(), 0) = s.mean_age_years;
  x(config.eir_index(), 0) = s.eir0;
  for (int t = 1; t < years; ++t) x.col(t) = x.col(0);
  for (int t = 0; t < years; ++t) {
    double nu = 0.0;
    if (!s.nu.empty()) nu = s.nu[std::min<std::size_t>(static_cast<std::size_t>(t), s.nu.size() - 1)];
    x(config.nu_index(), t) = nu;
  }
  return x;
}

Standardizer Standardizer::fit(std::span<const Eigen::MatrixXd> sequences) {
  if (sequences.size() < 2) throw ConfigError("standardizer needs at least two training sequences");
  const auto dim = sequences.front().rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  double count = 0.0;
  for (const auto& s : sequences) {
    if (s.rows() != dim) throw ConfigError("feature dimension mismatch");
    sum += s.rowwise().sum();
    count += static_cast<double>(s.cols());
  }
  Standardizer out;
  out.mean = sum / count;
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(dim);
  for (const auto& s : sequences) ss += (s.colwise() - out.mean).array().square().matrix().rowwise().sum();
  out.scale = (ss / count).array().sqrt();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (!(out.scale(j) > 1e-12 * std::max(1.0, std::fabs(out.mean(j))))) {
      out.scale(j) = 1.0;
      out.constant_features.push_back(static_cast<int>(j));
    }
  }
  return out;
}

void Standardizer::apply_inplace(Eigen::MatrixXd& x) const {
  if (x.rows() != mean.size()) throw ConfigError("feature dimension mismatch");
  x = (x.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = x;
  apply_inplace(out);
  return out;
}

Eigen::MatrixXd Standardizer::unapply(const Eigen::MatrixXd& z) const {
  if (z.rows() != mean.size()) throw ConfigError("feature dimension mismatch");
  return ((z.array().colwise() * scale.array()).colwise() + mean.array()).matrix();
}

}  // namespace msurr::surrogate
