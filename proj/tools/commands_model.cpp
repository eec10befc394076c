// train, evaluate, predict
#include <chrono>
#include <iostream>
#include <memory>
#include <sstream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/inference/likelihood.hpp"
#include "msurr/io/text.hpp"
#include "msurr/sampling/sampling.hpp"
#include "msurr/surrogate/checkpoint.hpp"
#include "msurr/surrogate/train.hpp"

namespace msurr::cli {
namespace {

using nlohmann::json;

struct TrainOptions {
  std::string data, out;
  int epochs = 100;
  int batch = 100;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  std::string loss = "logcosh";
  std::string optimizer = "adam";
  double dropout = 0.0;
  std::string cell = "lstm";
  int hidden1 = 383;
  int hidden2 = 365;
  double clip = 5.0;
  int rainfall_resolution = 365;
  bool grid = false;
  int grid_epochs = 0;  // epochs per grid point (0: --epochs)
};

surrogate::TrainConfig to_config(const TrainOptions& o) {
  surrogate::TrainConfig c;
  c.optimizer.kind = surrogate::optimizer_from_string(o.optimizer);
  c.optimizer.learning_rate = o.lr;
  c.loss = surrogate::loss_from_string(o.loss);
  c.batch_size = o.batch;
  c.dropout = o.dropout;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.clip_norm = o.clip;
  c.cell = surrogate::cell_from_string(o.cell);
  c.hidden1 = o.hidden1;
  c.hidden2 = o.hidden2;
  c.features.rainfall_resolution = o.rainfall_resolution;
  c.validate();
  return c;
}

std::string loss_csv(const std::vector<surrogate::EpochRecord>& history) {
  std::ostringstream s;
  s << "epoch,train_loss,val_loss,val_mse,seconds\n";
  for (const auto& r : history) {
    s << r.epoch << ',' << io::format_double(r.train_loss) << ',' << io::format_double(r.val_loss) << ','
      << io::format_double(r.val_mse) << ',' << io::format_double(r.seconds) << '\n';
  }
  return s.str();
}

void run_train(const TrainOptions& o, const CLI::App& cmd) {
  auto config = to_config(o);
  const auto dataset = sampling::load_dataset(o.data);
  spdlog::info("dataset {}: {} train, {} validation records, digest {}", o.data,
               dataset.indices(sampling::Split::Train).size(),
               dataset.indices(sampling::Split::Validation).size(), dataset.digest());
  const fs::path out = o.out;
  fs::create_directories(out);

  if (o.grid) {
    auto base = config;
    if (o.grid_epochs > 0) base.epochs = o.grid_epochs;
    base.on_epoch = nullptr;
    surrogate::Grid grid;
    spdlog::info("grid search over {} combinations, {} epochs each",
                 grid.optimizers.size() * grid.losses.size() * grid.batch_sizes.size() * grid.dropouts.size() *
                     grid.cells.size(),
                 base.epochs);
    const auto points = surrogate::grid_search(dataset, base, grid);
    std::ostringstream csv;
    csv << "rank,optimizer,loss,batch,dropout,cell,val_mse\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& c = points[i].config;
      csv << i + 1 << ',' << surrogate::to_string(c.optimizer.kind) << ',' << surrogate::to_string(c.loss) << ','
          << c.batch_size << ',' << io::format_double(c.dropout) << ',' << surrogate::to_string(c.cell) << ','
          << io::format_double(points[i].val_mse) << '\n';
    }
    io::write_file_atomic(out / "grid.csv", csv.str());
    const auto& best = points.front().config;
    spdlog::info("best grid point: {} (val MSE {:.3e})", best.summary(), points.front().val_mse);
    config.optimizer.kind = best.optimizer.kind;
    config.loss = best.loss;
    config.batch_size = best.batch_size;
    config.dropout = best.dropout;
    config.cell = best.cell;
  }

  config.on_epoch = [](const surrogate::EpochRecord& r) {
    spdlog::info("epoch {:>4}  train {:.4e}  val {:.4e}  val MSE {:.4e}  ({:.1f}s)", r.epoch, r.train_loss,
                 r.val_loss, r.val_mse, r.seconds);
  };
  spdlog::info("training {}", config.summary());
  const auto result = surrogate::train(dataset, config);
  surrogate::save_checkpoint(out / "model.ckpt", result.model);
  io::write_file_atomic(out / "loss.csv", loss_csv(result.model.meta.history));
  const json summary{{"model_checksum", surrogate::model_checksum(result.model)},
                     {"settings", result.model.meta.settings},
                     {"data_digest", result.model.meta.data_digest},
                     {"best_epoch", result.model.meta.best_epoch},
                     {"baseline_val_mse", result.baseline_val_mse},
                     {"best_val_mse", result.best_val_mse}};
  io::write_file_atomic(out / "train.json", summary.dump(2) + "\n");
  record_run(out, cmd);
  spdlog::info("best epoch {} with validation MSE {:.4e} (untrained {:.4e}); wrote {}", result.model.meta.best_epoch,
               result.best_val_mse, result.baseline_val_mse, (out / "model.ckpt").string());
}

struct EvaluateOptions {
  std::string model, data, split = "validation", out;
};

void run_evaluate(const EvaluateOptions& o) {
  const auto model = surrogate::load_checkpoint(o.model);
  const auto dataset = sampling::load_dataset(o.data);
  std::vector<std::size_t> indices;
  if (o.split == "train") {
    indices = dataset.indices(sampling::Split::Train);
  } else if (o.split == "validation") {
    indices = dataset.indices(sampling::Split::Validation);
  } else {
    for (std::size_t i = 0; i < dataset.size(); ++i) indices.push_back(i);
  }
  if (indices.empty()) throw ConfigError("split '" + o.split + "' of " + o.data + " is empty");
  const auto e = surrogate::evaluate(model, dataset, indices);
  const json report{{"model_checksum", surrogate::model_checksum(model)},
                    {"data_digest", dataset.digest()},
                    {"split", o.split},
                    {"samples", e.samples},
                    {"mse", e.mse},
                    {"per_year_mse", e.per_year},
                    {"fraction_mse_below_1e-2", e.fraction_below_1e2},
                    {"fraction_mse_below_1e-3", e.fraction_below_1e3}};
  if (o.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    io::write_file_atomic(o.out, report.dump(2) + "\n");
  }
  spdlog::info("{} records: MSE {:.4e}; {:.1f}% below 1e-2, {:.1f}% below 1e-3", e.samples, e.mse,
               100.0 * e.fraction_below_1e2, 100.0 * e.fraction_below_1e3);
}

struct PredictOptions {
  std::string model, scenario, out;
  int years = 0;
  bool use_double = false;
};

json trajectory_json(const surrogate::Trajectory& t) {
  json daily = json::array(), monthly = json::array(), annual = json::array();
  for (Eigen::Index y = 0; y < t.cols(); ++y) {
    daily.push_back(std::vector<double>(t.col(y).data(), t.col(y).data() + t.rows()));
    std::vector<double> months;
    for (int m = 1; m <= 12; ++m) months.push_back(inference::monthly_prevalence(t, static_cast<int>(y), m));
    monthly.push_back(months);
    annual.push_back(t.col(y).mean());
  }
  return {{"daily", daily}, {"monthly", monthly}, {"annual_mean", annual}};
}

void run_predict(const PredictOptions& o) {
  const auto model = surrogate::load_checkpoint(o.model);
  const auto checksum = surrogate::model_checksum(model);
  int file_years = 0;
  auto scenarios = load_scenario_file(o.scenario, file_years);
  const surrogate::Predictor predictor(model);

  json results = json::array();
  for (auto& s : scenarios) {
    const int years = o.years > 0 ? o.years
                      : file_years > 0 ? file_years
                                       : std::max<int>(1, static_cast<int>(s.nu.size()));
    // Usage beyond the horizon is irrelevant to the prediction.
    if (s.nu.size() > static_cast<std::size_t>(years)) s.nu.resize(static_cast<std::size_t>(years));
    s.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto t = o.use_double ? surrogate::predict(model, s, years) : predictor.predict(s, years);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    spdlog::info("{}: {} years in {:.2f} ms", s.id, years, ms);
    json r = trajectory_json(t);
    r["id"] = s.id;
    r["years"] = years;
    r["model_checksum"] = checksum;
    results.push_back(std::move(r));
  }
  const json doc = results.size() == 1 ? results.front() : json{{"results", results}};
  if (o.out.empty()) {
    std::cout << doc.dump() << '\n';
  } else {
    io::write_file_atomic(o.out, doc.dump() + "\n");
  }
}

}  // namespace

void register_model_commands(CLI::App& app) {
  {
    auto o = std::make_shared<TrainOptions>();
    auto* cmd = app.add_subcommand("train", "Train the recurrent surrogate on a dataset");
    cmd->add_option("--data", o->data, "Dataset directory (from `sample`)")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--epochs", o->epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--batch", o->batch, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--lr", o->lr, "Learning rate")->capture_default_str();
    cmd->add_option("--seed", o->seed, "Initialization, shuffling and dropout seed")->capture_default_str();
    cmd->add_option("--loss", o->loss, "Loss function")->capture_default_str()->check(CLI::IsMember({"mse", "logcosh"}));
    cmd->add_option("--optimizer", o->optimizer, "Optimizer")
        ->capture_default_str()
        ->check(CLI::IsMember({"adam", "rmsprop"}));
    cmd->add_option("--dropout", o->dropout, "Dropout rate between layers")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.99));
    cmd->add_option("--cell", o->cell, "Recurrent cell")->capture_default_str()->check(CLI::IsMember({"lstm", "gru"}));
    cmd->add_option("--hidden1", o->hidden1, "First recurrent layer width")->capture_default_str();
    cmd->add_option("--hidden2", o->hidden2, "Second recurrent layer width")->capture_default_str();
    cmd->add_option("--clip", o->clip, "Global gradient-norm clip (<= 0 disables)")->capture_default_str();
    cmd->add_option("--rainfall-resolution", o->rainfall_resolution, "Rainfall profile points per year")
        ->capture_default_str()
        ->check(CLI::Range(1, 365));
    cmd->add_flag("--grid", o->grid, "Grid-search optimizer, loss, batch, dropout and cell first");
    cmd->add_option("--grid-epochs", o->grid_epochs, "Epochs per grid point (0: --epochs)")->capture_default_str();
    cmd->add_option("--out", o->out, "Output directory (model.ckpt, loss.csv)")->required();
    cmd->callback([o, cmd] { run_train(*o, *cmd); });
  }
  {
    auto o = std::make_shared<EvaluateOptions>();
    auto* cmd = app.add_subcommand("evaluate", "Prediction errors of a model on a dataset");
    cmd->add_option("--model", o->model, "Checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", o->data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--split", o->split, "Records to evaluate")
        ->capture_default_str()
        ->check(CLI::IsMember({"train", "validation", "all"}));
    cmd->add_option("--out", o->out, "Write the JSON report here instead of stdout");
    cmd->callback([o] { run_evaluate(*o); });
  }
  {
    auto o = std::make_shared<PredictOptions>();
    auto* cmd = app.add_subcommand("predict", "Predict prevalence trajectories with the surrogate");
    cmd->add_option("--model", o->model, "Checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--scenario", o->scenario, "Scenario file: text format, JSON scenario or {scenario, years}")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--years", o->years, "Prediction horizon (default: from the file or the usage length)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--double", o->use_double, "Use the double-precision network");
    cmd->add_option("--out", o->out, "Write JSON here instead of stdout");
    cmd->callback([o] { run_predict(*o); });
  }
}

}  // namespace msurr::cli
