#include "msurr/surrogate/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "msurr/error.hpp"
#include "msurr/io/text.hpp"
#include "msurr/rng.hpp"

namespace msurr::surrogate {
namespace {

using Eigen::MatrixXd;
using sampling::Split;

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kDropoutStream = 3;

PreparedSplit prepare(const sampling::Dataset& d, const std::vector<std::size_t>& idx, const SurrogateModel& m) {
  PreparedSplit out;
  for (auto i : idx) {
    const int years = d.outputs[i].years;
    MatrixXd x = featurize(d.scenarios[i], years, m.features);
    m.standardizer.apply_inplace(x);
    out.inputs.push_back(std::move(x));
    out.targets.push_back(target_of(d.outputs[i]));
  }
  return out;
}

// Gather sequences [first, first + n) of `order` into time-major matrices.
void gather(const PreparedSplit& s, const std::vector<std::size_t>& order, std::size_t first, std::size_t n,
            MatrixXd& x, MatrixXd& y) {
  const auto years = s.inputs[order[first]].cols();
  const auto batch = static_cast<Eigen::Index>(n);
  x.resize(s.inputs[order[first]].rows(), years * batch);
  y.resize(s.targets[order[first]].rows(), years * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto k = order[first + static_cast<std::size_t>(b)];
    if (s.inputs[k].cols() != years) throw ConfigError("all sequences in a dataset must share one length");
    for (Eigen::Index t = 0; t < years; ++t) {
      x.col(t * batch + b) = s.inputs[k].col(t);
      y.col(t * batch + b) = s.targets[k].col(t);
    }
  }
}

struct SplitScore {
  double loss = 0.0;
  double mse = 0.0;
};

SplitScore score(const Network& net, const PreparedSplit& s, LossKind kind, int chunk) {
  std::vector<std::size_t> order(s.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  double loss_sum = 0.0, mse_sum = 0.0, n_sum = 0.0;
  MatrixXd x, y;
  for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(chunk)) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(chunk), order.size() - first);
    gather(s, order, first, n, x, y);
    const auto years = static_cast<int>(s.inputs[first].cols());
    const MatrixXd p = net.forward(x, years);
    const double finite = static_cast<double>((y.array() == y.array()).count());
    if (finite == 0.0) continue;
    loss_sum += loss(p, y, kind) * finite;
    mse_sum += loss(p, y, LossKind::Mse) * finite;
    n_sum += finite;
  }
  if (n_sum == 0.0) return {std::nan(""), std::nan("")};
  return {loss_sum / n_sum, mse_sum / n_sum};
}

}  // namespace

void TrainConfig::validate() const {
  optimizer.validate();
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (hidden1 < 1 || hidden2 < 1) throw ConfigError("hidden sizes must be positive");
  if (features.rainfall_resolution < 1) throw ConfigError("rainfall resolution must be positive");
}

std::string TrainConfig::summary() const {
  std::ostringstream os;
  os << "optimizer=" << to_string(optimizer.kind) << " lr=" << io::format_double(optimizer.learning_rate)
     << " loss=" << to_string(loss) << " batch=" << batch_size << " dropout=" << io::format_double(dropout)
     << " epochs=" << epochs << " seed=" << seed << " clip=" << io::format_double(clip_norm)
     << " cell=" << to_string(cell) << " hidden=" << hidden1 << "," << hidden2
     << " rainfall_resolution=" << features.rainfall_resolution;
  return os.str();
}

Trajectory target_of(const model::SimOutput& output) {
  if (output.prevalence.size() != static_cast<std::size_t>(output.years) * model::kDaysPerYear) {
    throw ConfigError("simulation output has the wrong length");
  }
  return Eigen::Map<const MatrixXd>(output.prevalence.data(), model::kDaysPerYear, output.years);
}

TrainResult train(const sampling::Dataset& dataset, const TrainConfig& config) {
  config.validate();
  const auto train_idx = dataset.indices(Split::Train);
  const auto val_idx = dataset.indices(Split::Validation);
  if (train_idx.size() < 2 || val_idx.empty()) {
    throw ConfigError("training needs at least two train records and one validation record");
  }
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();

  SurrogateModel model;
  model.features = config.features;
  {
    std::vector<MatrixXd> raw;
    raw.reserve(train_idx.size());
    for (auto i : train_idx) raw.push_back(featurize(dataset.scenarios[i], dataset.outputs[i].years, config.features));
    model.standardizer = Standardizer::fit(raw);
  }
  NetworkShape shape;
  shape.input = config.features.dim();
  shape.hidden1 = config.hidden1;
  shape.hidden2 = config.hidden2;
  shape.output = model::kDaysPerYear;
  shape.cell = config.cell;
  model.network = Network::initialized(shape, derive_seed(config.seed, kInitStream));
  model.meta.seed = config.seed;
  model.meta.settings = config.summary();
  model.meta.data_digest = dataset.digest();

  const PreparedSplit train_set = prepare(dataset, train_idx, model);
  const PreparedSplit val_set = prepare(dataset, val_idx, model);

  Optimizer optimizer(config.optimizer, model.network.parameters().size());
  Rng shuffle(derive_seed(config.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));

  TrainResult result;
  auto record = [&](int epoch, double train_loss) {
    const auto s = score(model.network, val_set, config.loss, config.batch_size);
    EpochRecord r{epoch, train_loss, s.loss, s.mse,
                  std::chrono::duration<double>(clock::now() - started).count()};
    model.meta.history.push_back(r);
    if (config.on_epoch) config.on_epoch(r);
    return r;
  };
  const auto initial = record(0, score(model.network, train_set, config.loss, config.batch_size).loss);
  result.baseline_val_mse = initial.val_mse;
  Eigen::VectorXd best = model.network.parameters();
  double best_loss = initial.val_loss;
  result.best_val_mse = initial.val_mse;
  model.meta.best_epoch = 0;

  std::vector<std::size_t> order(train_idx.size());
  std::iota(order.begin(), order.end(), 0);
  Network::Cache cache;
  Eigen::VectorXd grad(model.network.parameters().size());
  MatrixXd x, y, d_out;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0, weight_sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), order.size() - first);
      gather(train_set, order, first, n, x, y);
      const auto years = static_cast<int>(train_set.inputs[order[first]].cols());
      const MatrixXd& p = model.network.forward(x, years, cache, config.dropout, &dropout_rng);
      const double l = loss(p, y, config.loss, &d_out);
      if (!std::isfinite(l)) {
        throw DomainError("training diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
      }
      grad.setZero();
      model.network.backward(cache, d_out, grad);
      clip_by_norm(grad, config.clip_norm);
      optimizer.step(model.network.parameters(), grad);
      loss_sum += l * static_cast<double>(n);
      weight_sum += static_cast<double>(n);
    }
    const auto r = record(epoch, loss_sum / weight_sum);
    if (!std::isfinite(r.val_loss)) {
      throw DomainError("training diverged at epoch " + std::to_string(epoch) + " (validation loss is not finite)");
    }
    if (r.val_loss < best_loss) {
      best_loss = r.val_loss;
      best = model.network.parameters();
      result.best_val_mse = r.val_mse;
      model.meta.best_epoch = epoch;
    }
  }
  model.network.parameters() = best;
  model.meta.epochs = config.epochs;
  result.model = std::move(model);
  return result;
}

std::vector<Trajectory> predict_split(const SurrogateModel& model, const sampling::Dataset& dataset, Split split,
                                      int chunk) {
  const auto idx = dataset.indices(split);
  std::vector<Trajectory> out;
  for (std::size_t first = 0; first < idx.size(); first += static_cast<std::size_t>(chunk)) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(chunk), idx.size() - first);
    std::vector<model::ScenarioParams> batch;
    for (std::size_t k = 0; k < n; ++k) batch.push_back(dataset.scenarios[idx[first + k]]);
    for (auto& t : predict_batch(model, batch, dataset.outputs[idx[first]].years)) out.push_back(std::move(t));
  }
  return out;
}

ErrorSummary evaluate(const SurrogateModel& model, const sampling::Dataset& dataset,
                      const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> idx = indices;
  if (idx.empty()) {
    idx.resize(dataset.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  std::vector<Trajectory> predictions, targets;
  constexpr std::size_t kChunk = 100;
  for (std::size_t first = 0; first < idx.size(); first += kChunk) {
    const std::size_t n = std::min(kChunk, idx.size() - first);
    std::vector<model::ScenarioParams> batch;
    for (std::size_t k = 0; k < n; ++k) batch.push_back(dataset.scenarios[idx[first + k]]);
    for (auto& t : predict_batch(model, batch, dataset.outputs[idx[first]].years)) predictions.push_back(std::move(t));
    for (std::size_t k = 0; k < n; ++k) targets.push_back(target_of(dataset.outputs[idx[first + k]]));
  }
  return summarize_errors(predictions, targets);
}

std::vector<GridPoint> grid_search(const sampling::Dataset& dataset, const TrainConfig& base, const Grid& grid) {
  std::vector<GridPoint> out;
  for (auto opt : grid.optimizers) {
    for (auto l : grid.losses) {
      for (int b : grid.batch_sizes) {
        for (double dr : grid.dropouts) {
          for (auto cell : grid.cells) {
            TrainConfig c = base;
            c.optimizer.kind = opt;
            c.loss = l;
            c.batch_size = b;
            c.dropout = dr;
            c.cell = cell;
            c.on_epoch = nullptr;
            out.push_back({c, train(dataset, c).best_val_mse});
          }
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GridPoint& a, const GridPoint& b) { return a.val_mse < b.val_mse; });
  return out;
}

}  // namespace msurr::surrogate
