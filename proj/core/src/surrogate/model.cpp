#include "msurr/surrogate/model.hpp"

#include <cmath>

#include "msurr/error.hpp"
#include "recurrent.hpp"

namespace msurr::surrogate {

void SurrogateModel::validate() const {
  if (!standardizer.fitted()) throw ConfigError("model has no fitted standardizer");
  if (standardizer.dim() != features.dim() || network.shape().input != features.dim()) {
    throw ConfigError("model feature dimensions disagree");
  }
  if (network.shape().output != 365) throw ConfigError("model output must be 365 daily values");
  if (!network.parameters().allFinite()) throw ConfigError("model has non-finite weights");
  if (!(standardizer.scale.array() > 0.0).all()) throw ConfigError("standardizer scale must be positive");
}

Eigen::MatrixXd network_input(const SurrogateModel& model, std::span<const model::ScenarioParams> scenarios,
                              int years) {
  if (years < 1) throw ConfigError("years must be at least 1");
  const auto batch = static_cast<Eigen::Index>(scenarios.size());
  if (batch == 0) throw ConfigError("no scenarios to predict");
  Eigen::MatrixXd x(model.features.dim(), years * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::MatrixXd f = featurize(scenarios[b], years, model.features);
    model.standardizer.apply_inplace(f);
    for (int t = 0; t < years; ++t) x.col(t * batch + b) = f.col(t);
  }
  return x;
}

std::vector<Trajectory> split_output(const Eigen::MatrixXd& output, int years) {
  const Eigen::Index batch = output.cols() / years;
  std::vector<Trajectory> out(static_cast<std::size_t>(batch), Trajectory(output.rows(), years));
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int t = 0; t < years; ++t) out[b].col(t) = output.col(t * batch + b);
  }
  return out;
}

Trajectory predict(const SurrogateModel& model, const model::ScenarioParams& scenario, int years) {
  return predict_batch(model, std::span<const model::ScenarioParams>(&scenario, 1), years).front();
}

std::vector<Trajectory> predict_batch(const SurrogateModel& model, std::span<const model::ScenarioParams> scenarios,
                                      int years) {
  return split_output(model.network.forward(network_input(model, scenarios, years), years), years);
}

Predictor::Predictor(const SurrogateModel& model)
    : features_(model.features), standardizer_(model.standardizer), network_(model.network) {
  model.validate();
}

Trajectory Predictor::predict(const model::ScenarioParams& scenario, int years) const {
  return predict_batch(std::span<const model::ScenarioParams>(&scenario, 1), years).front();
}

std::vector<Trajectory> Predictor::predict_batch(std::span<const model::ScenarioParams> scenarios, int years) const {
  if (years < 1) throw ConfigError("years must be at least 1");
  const auto batch = static_cast<Eigen::Index>(scenarios.size());
  if (batch == 0) throw ConfigError("no scenarios to predict");
  Eigen::MatrixXf x(features_.dim(), years * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::MatrixXd f = featurize(scenarios[b], years, features_);
    standardizer_.apply_inplace(f);
    for (int t = 0; t < years; ++t) x.col(t * batch + b) = f.col(t).cast<float>();
  }
  return split_output(network_.forward(x, years).cast<double>(), years);
}

template <class S>
struct EirSensitivity::Kernel {
  using M = detail::Mat<S>;
  CellType cell;
  M u1, w2, u2, wd;
  Eigen::Matrix<S, Eigen::Dynamic, 1> b2, bd, w1_eir;
  M z1_base;  // W1 x + b1 with the Λ₀ feature at zero, one column per year
  double eir_mean, eir_scale;
  int years;
  RecurrentState<S> l1, l2;
  M output;
  int batch = 0;

  Kernel(const SurrogateModel& m, const Eigen::MatrixXd& x, int years_)
      : cell(m.network.shape().cell),
        u1(m.network.u1().template cast<S>()),
        w2(m.network.w2().template cast<S>()),
        u2(m.network.u2().template cast<S>()),
        wd(m.network.wd().template cast<S>()),
        b2(m.network.b2().template cast<S>()),
        bd(m.network.bd().template cast<S>()),
        years(years_) {
    const int row = m.features.eir_index();
    eir_mean = m.standardizer.mean(row);
    eir_scale = m.standardizer.scale(row);
    w1_eir = m.network.w1().col(row).template cast<S>();
    Eigen::MatrixXd x0 = x;
    x0.row(row).setZero();
    Eigen::MatrixXd z = m.network.w1() * x0;
    z.colwise() += m.network.b1().col(0);
    z1_base = z.template cast<S>();
  }

  void forward(std::span<const double> eir0, std::vector<Trajectory>& out) {
    batch = static_cast<int>(eir0.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(years) * batch;
    l1.gates.resize(z1_base.rows(), cols);
    for (int t = 0; t < years; ++t) {
      for (int b = 0; b < batch; ++b) {
        const S scaled = static_cast<S>((eir0[b] - eir_mean) / eir_scale);
        l1.gates.col(t * batch + b) = z1_base.col(t) + w1_eir * scaled;
      }
    }
    detail::forward_recurrent<S>(cell, u1, years, l1);
    l2.gates.noalias() = w2 * l1.hidden;
    l2.gates.colwise() += b2;
    detail::forward_recurrent<S>(cell, u2, years, l2);
    output = detail::run_head<S>(wd, bd, l2.hidden);
    out.assign(static_cast<std::size_t>(batch), Trajectory(output.rows(), years));
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t < years; ++t) out[b].col(t) = output.col(t * batch + b).template cast<double>();
    }
  }

  std::vector<double> backward(std::span<const Trajectory> d_traj) const {
    if (static_cast<int>(d_traj.size()) != batch) throw ConfigError("gradient batch does not match evaluate()");
    M d_pre(output.rows(), output.cols());
    for (int b = 0; b < batch; ++b) {
      if (d_traj[b].rows() != output.rows() || d_traj[b].cols() != years) {
        throw ConfigError("trajectory gradient has the wrong shape");
      }
      for (int t = 0; t < years; ++t) d_pre.col(t * batch + b) = d_traj[b].col(t).template cast<S>();
    }
    d_pre.array() *= output.array() * (S(1) - output.array());
    const M d_h2 = wd.transpose() * d_pre;
    const M dz2 = detail::backward_recurrent<S>(cell, u2, l2, d_h2, years, nullptr);
    const M d_h1 = w2.transpose() * dz2;
    const M dz1 = detail::backward_recurrent<S>(cell, u1, l1, d_h1, years, nullptr);
    const Eigen::Matrix<S, 1, Eigen::Dynamic> proj = w1_eir.transpose() * dz1;
    std::vector<double> grad(static_cast<std::size_t>(batch), 0.0);
    for (int t = 0; t < years; ++t) {
      for (int b = 0; b < batch; ++b) grad[b] += static_cast<double>(proj(t * batch + b));
    }
    for (double& g : grad) g /= eir_scale;
    return grad;
  }
};

struct EirSensitivity::Impl {
  std::unique_ptr<Kernel<double>> dbl;
  std::unique_ptr<Kernel<float>> flt;
  std::vector<Trajectory> last;
};

EirSensitivity::EirSensitivity(const SurrogateModel& model, model::ScenarioParams scenario, int years,
                               Precision precision)
    : impl_(std::make_unique<Impl>()), years_(years) {
  model.validate();
  const Eigen::MatrixXd x = network_input(model, std::span<const model::ScenarioParams>(&scenario, 1), years);
  if (precision == Precision::Double) {
    impl_->dbl = std::make_unique<Kernel<double>>(model, x, years);
  } else {
    impl_->flt = std::make_unique<Kernel<float>>(model, x, years);
  }
}

EirSensitivity::~EirSensitivity() = default;
EirSensitivity::EirSensitivity(EirSensitivity&&) noexcept = default;
EirSensitivity& EirSensitivity::operator=(EirSensitivity&&) noexcept = default;

const std::vector<Trajectory>& EirSensitivity::evaluate(std::span<const double> eir0) {
  if (eir0.empty()) throw ConfigError("no Λ₀ values to evaluate");
  if (impl_->dbl) {
    impl_->dbl->forward(eir0, impl_->last);
  } else {
    impl_->flt->forward(eir0, impl_->last);
  }
  return impl_->last;
}

std::vector<double> EirSensitivity::eir_gradient(std::span<const Trajectory> d_trajectory) const {
  if (impl_->last.empty()) throw ConfigError("evaluate() must run before eir_gradient()");
  return impl_->dbl ? impl_->dbl->backward(d_trajectory) : impl_->flt->backward(d_trajectory);
}

ErrorSummary summarize_errors(std::span<const Trajectory> predictions, std::span<const Trajectory> targets) {
  if (predictions.size() != targets.size()) throw ConfigError("prediction and target counts differ");
  ErrorSummary out;
  out.samples = predictions.size();
  double total = 0.0;
  double total_n = 0.0;
  std::vector<double> year_sum, year_n;
  std::size_t below2 = 0, below3 = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto& p = predictions[k];
    const auto& y = targets[k];
    if (p.rows() != y.rows() || p.cols() != y.cols()) throw ConfigError("prediction and target shapes differ");
    if (year_sum.size() < static_cast<std::size_t>(p.cols())) {
      year_sum.resize(static_cast<std::size_t>(p.cols()), 0.0);
      year_n.resize(static_cast<std::size_t>(p.cols()), 0.0);
    }
    double s = 0.0, n = 0.0;
    for (Eigen::Index t = 0; t < p.cols(); ++t) {
      for (Eigen::Index d = 0; d < p.rows(); ++d) {
        if (!std::isfinite(y(d, t))) continue;
        const double r = p(d, t) - y(d, t);
        s += r * r;
        n += 1.0;
        year_sum[t] += r * r;
        year_n[t] += 1.0;
      }
    }
    const double mse = n > 0.0 ? s / n : std::nan("");
    out.per_sample.push_back(mse);
    below2 += mse < 1e-2;
    below3 += mse < 1e-3;
    total += s;
    total_n += n;
  }
  out.mse = total_n > 0.0 ? total / total_n : std::nan("");
  for (std::size_t t = 0; t < year_sum.size(); ++t) {
    out.per_year.push_back(year_n[t] > 0.0 ? year_sum[t] / year_n[t] : std::nan(""));
  }
  if (out.samples > 0) {
    out.fraction_below_1e2 = static_cast<double>(below2) / static_cast<double>(out.samples);
    out.fraction_below_1e3 = static_cast<double>(below3) / static_cast<double>(out.samples);
  }
  return out;
}

}  // namespace msurr::surrogate
