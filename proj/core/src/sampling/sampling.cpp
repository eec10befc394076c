#include "msurr/sampling/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "msurr/error.hpp"
#include "msurr/io/scenario_io.hpp"
#include "msurr/io/text.hpp"
#include "msurr/rng.hpp"

namespace msurr::sampling {
namespace {

using model::ScenarioBounds;

// Seed streams.
constexpr std::uint64_t kDesignStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kSimStream = 3;
constexpr std::uint64_t kHistoricStream = 4;

constexpr std::string_view kManifestHeader = "# msurr-dataset v1";

double affine(double u, double lo, double hi) { return lo + u * (hi - lo); }

std::string scenario_id(std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "s" + digits;
}

std::vector<Split> assign_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kSplitStream));
  rng.shuffle(std::span<std::size_t>(order));
  const auto train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  std::vector<Split> split(n, Split::Validation);
  for (std::size_t k = 0; k < std::min(train, n); ++k) split[order[k]] = Split::Train;
  return split;
}

std::string join_ids(const Dataset& d, Split which) {
  std::string s;
  for (auto i : d.indices(which)) {
    if (!s.empty()) s += ", ";
    s += d.scenarios[i].id;
  }
  return s;
}

std::string serialize_manifest(const Dataset& d, const std::string& digest) {
  const auto& p = d.provenance;
  std::ostringstream os;
  os << kManifestHeader << "\n";
  os << "generator = " << p.generator << "\n";
  os << "variant = " << p.variant << "\n";
  os << "seed = " << p.seed << "\n";
  os << "count = " << p.count << "\n";
  os << "years = " << p.years << "\n";
  os << "population = " << p.population << "\n";
  os << "warmup_years = " << p.warmup_years << "\n";
  os << "train_fraction = " << io::format_double(p.train_fraction) << "\n";
  os << "log_eir = " << (p.log_eir ? "true" : "false") << "\n";
  os << "train = " << join_ids(d, Split::Train) << "\n";
  os << "validation = " << join_ids(d, Split::Validation) << "\n";
  for (const auto& f : d.failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::replace(msg.begin(), msg.end(), '#', ' ');
    os << "failed = " << f.id << " | " << msg << "\n";
  }
  os << "digest = " << digest << "\n";
  return os.str();
}

}  // namespace

Eigen::MatrixXd latin_hypercube(int count, int dims, std::uint64_t seed) {
  if (count < 1 || dims < 1) throw ConfigError("latin hypercube needs count >= 1 and dims >= 1");
  Rng rng(seed);
  Eigen::MatrixXd out(count, dims);
  std::vector<int> perm(static_cast<std::size_t>(count));
  for (int j = 0; j < dims; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    for (int i = 0; i < count; ++i) {
      // Clamp guards the rounding of (k + u) / count up to the next stratum.
      const double x = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / count;
      out(i, j) = std::min(x, std::nextafter(static_cast<double>(perm[static_cast<std::size_t>(i)] + 1) / count, 0.0));
    }
  }
  return out;
}

model::ScenarioParams transform_margins(std::span<const double> point, int years, const MarginOptions& options) {
  if (years < 0) throw ConfigError("years must be non-negative");
  if (point.size() != static_cast<std::size_t>(kStaticDims + years)) {
    throw ConfigError("expected " + std::to_string(kStaticDims + years) + " coordinates, got " +
                      std::to_string(point.size()));
  }
  for (double u : point) {
    if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("unit-cube coordinates must lie in [0, 1]");
  }
  model::ScenarioParams s;
  if (options.log_eir) {
    s.eir0 = std::exp(affine(point[0], std::log(ScenarioBounds::eir0_min), std::log(ScenarioBounds::eir0_max)));
  } else {
    s.eir0 = affine(point[0], 0.0, ScenarioBounds::eir0_max);
  }
  s.eir0 = std::clamp(s.eir0, ScenarioBounds::eir0_min, ScenarioBounds::eir0_max);
  s.mean_age_years = affine(point[1], ScenarioBounds::mean_age_min, ScenarioBounds::mean_age_max);
  const double lo = ScenarioBounds::fourier_min, hi = ScenarioBounds::fourier_max;
  s.rainfall.g0 = affine(point[2], lo, hi);
  for (int i = 0; i < 3; ++i) {
    s.rainfall.g[i] = affine(point[3 + i], lo, hi);
    s.rainfall.h[i] = affine(point[6 + i], lo, hi);
  }
  const double total = point[9] + point[10] + point[11];
  for (int v = 0; v < model::kSpecies; ++v) s.kappa[v] = total > 0.0 ? point[9 + v] / total : 1.0 / 3.0;
  s.nu.resize(static_cast<std::size_t>(years));
  for (int t = 0; t < years; ++t) s.nu[t] = affine(point[kStaticDims + t], ScenarioBounds::nu_min, ScenarioBounds::nu_max);
  return s;
}

std::vector<double> expand_nu(std::span<const double> knots, int years) {
  if (years < 0) throw ConfigError("years must be non-negative");
  if (knots.size() > static_cast<std::size_t>(years)) throw ConfigError("more usage knots than years");
  std::vector<double> out(static_cast<std::size_t>(years), knots.empty() ? 0.0 : knots.back());
  std::copy(knots.begin(), knots.end(), out.begin());
  return out;
}

std::vector<model::ScenarioParams> sample_scenarios(int count, int years, std::uint64_t seed,
                                                    const MarginOptions& options) {
  const auto design = latin_hypercube(count, kStaticDims + years, derive_seed(seed, kDesignStream));
  std::vector<model::ScenarioParams> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<double> row(static_cast<std::size_t>(design.cols()));
  for (int i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < design.cols(); ++j) row[static_cast<std::size_t>(j)] = design(i, j);
    out.push_back(transform_margins(row, years, options));
    out.back().id = scenario_id(static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<model::ScenarioParams> sample_historic_scenarios(int count, int years,
                                                             std::span<const io::UsageTable> tables,
                                                             std::uint64_t seed, const MarginOptions& options) {
  if (tables.empty()) throw ConfigError("historic sampling needs at least one usage table");
  for (const auto& t : tables) {
    if (t.usage.empty()) throw ConfigError("historic usage table is empty");
  }
  auto out = sample_scenarios(count, 0, seed, options);
  Rng rng(derive_seed(seed, kHistoricStream));
  for (auto& s : out) {
    const auto& table = tables[rng.below(tables.size())];
    // Start anywhere a full window fits; short tables start at their first year.
    const int span = std::max(1, static_cast<int>(table.usage.size()) - years + 1);
    const int start = table.first_year + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
    s.nu = table.window(start, years);
    for (double& x : s.nu) x = std::clamp(x, ScenarioBounds::nu_min, ScenarioBounds::nu_max);
  }
  return out;
}

std::vector<std::size_t> Dataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

std::string Dataset::digest() const {
  std::uint64_t h = io::fnv1a(io::serialize_scenarios(scenarios));
  h = io::fnv1a(io::serialize_sim_outputs(outputs), h);
  std::string labels;
  for (auto s : split) labels += s == Split::Train ? 'T' : 'V';
  for (const auto& f : failures) labels += "|" + f.id + ":" + f.message;
  return io::hex64(io::fnv1a(labels, h));
}

std::uint64_t scenario_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(derive_seed(seed, kSimStream), index);
}

Dataset run_scenarios(std::vector<model::ScenarioParams> scenarios, int years, const model::SimConfig& config,
                      std::uint64_t seed, const GenerateOptions& options) {
  config.validate();
  if (years < 1) throw ConfigError("years must be at least 1");
  if (!(options.train_fraction >= 0.0 && options.train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in [0, 1]");
  }
  const std::size_t n = scenarios.size();
  std::vector<model::SimOutput> outputs(n);
  std::vector<std::string> errors(n);
  std::vector<char> ok(n, 0);

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      model::SimConfig local = config;
      local.seed = scenario_seed(seed, i);
      try {
        outputs[i] = model::run_simulation(scenarios[i], years, local);
        ok[i] = 1;
      } catch (const Error& e) {
        errors[i] = e.what();
      }
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(++done, n);
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const auto split = assign_split(n, options.train_fraction, seed);
  Dataset d;
  d.provenance.seed = seed;
  d.provenance.count = static_cast<int>(n);
  d.provenance.years = years;
  d.provenance.population = config.population;
  d.provenance.warmup_years = config.warmup_years;
  d.provenance.train_fraction = options.train_fraction;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      d.failures.push_back({scenarios[i].id, errors[i]});
      continue;
    }
    d.scenarios.push_back(std::move(scenarios[i]));
    d.outputs.push_back(std::move(outputs[i]));
    d.split.push_back(split[i]);
  }
  return d;
}

Dataset generate_dataset(int count, int years, const model::SimConfig& config, std::uint64_t seed,
                         const GenerateOptions& options, const MarginOptions& margins) {
  if (count < 5) throw ConfigError("a dataset needs at least 5 scenarios");
  auto d = run_scenarios(sample_scenarios(count, years, seed, margins), years, config, seed, options);
  d.provenance.log_eir = margins.log_eir;
  return d;
}

Dataset historic_benchmark(int count, int years, std::span<const io::UsageTable> tables,
                           const model::SimConfig& config, std::uint64_t seed, GenerateOptions options,
                           const MarginOptions& margins) {
  options.train_fraction = 0.0;
  auto d = run_scenarios(sample_historic_scenarios(count, years, tables, seed, margins), years, config, seed,
                         options);
  d.provenance.variant = "historic";
  d.provenance.log_eir = margins.log_eir;
  return d;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  if (dataset.outputs.size() != dataset.scenarios.size() || dataset.split.size() != dataset.scenarios.size()) {
    throw ConfigError("dataset scenarios, outputs and split differ in length");
  }
  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  const fs::path staging = parent / (target.filename().string() + ".partial");
  fs::remove_all(staging);
  fs::create_directories(staging);
  io::write_file_atomic(staging / "scenarios.txt", io::serialize_scenarios(dataset.scenarios));
  io::write_file_atomic(staging / "outputs.txt", io::serialize_sim_outputs(dataset.outputs));
  io::write_file_atomic(staging / "manifest.txt", serialize_manifest(dataset, dataset.digest()));
  if (fs::exists(target)) {
    const fs::path old = parent / (target.filename().string() + ".old");
    fs::remove_all(old);
    fs::rename(target, old);
    fs::rename(staging, target);
    fs::remove_all(old);
  } else {
    fs::rename(staging, target);
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  const std::string text = io::read_file(manifest_path);
  if (io::trim(text.substr(0, text.find('\n'))) != kManifestHeader) {
    throw FormatError(manifest_path.string() + ": missing header '" + std::string(kManifestHeader) + "'");
  }
  Dataset d;
  std::string digest, train, validation;
  const std::string src = manifest_path.string();
  for (const auto& kv : io::parse_key_values(text, src)) {
    const std::string at = src + ":" + std::to_string(kv.line);
    auto& p = d.provenance;
    if (kv.key == "generator") p.generator = kv.value;
    else if (kv.key == "variant") p.variant = kv.value;
    else if (kv.key == "seed") p.seed = io::parse_u64(kv.value, at);
    else if (kv.key == "count") p.count = static_cast<int>(io::parse_int(kv.value, at));
    else if (kv.key == "years") p.years = static_cast<int>(io::parse_int(kv.value, at));
    else if (kv.key == "population") p.population = io::parse_u64(kv.value, at);
    else if (kv.key == "warmup_years") p.warmup_years = static_cast<int>(io::parse_int(kv.value, at));
    else if (kv.key == "train_fraction") p.train_fraction = io::parse_double(kv.value, at);
    else if (kv.key == "log_eir") p.log_eir = kv.value == "true";
    else if (kv.key == "train") train = kv.value;
    else if (kv.key == "validation") validation = kv.value;
    else if (kv.key == "digest") digest = kv.value;
    else if (kv.key == "failed") {
      const auto bar = kv.value.find(" | ");
      if (bar == std::string::npos) throw FormatError(at + ": expected 'id | message'");
      d.failures.push_back({kv.value.substr(0, bar), kv.value.substr(bar + 3)});
    } else {
      throw FormatError(at + ": unknown manifest key '" + kv.key + "'");
    }
  }
  d.scenarios = io::load_scenarios(dir / "scenarios.txt");
  const auto outputs_path = dir / "outputs.txt";
  d.outputs = io::parse_sim_outputs(io::read_file(outputs_path), outputs_path.string());
  if (d.outputs.size() != d.scenarios.size()) throw FormatError(dir.string() + ": scenario and output counts differ");

  std::vector<std::string> train_ids, validation_ids;
  for (auto id : io::split(train, ',')) {
    if (!io::trim(id).empty()) train_ids.emplace_back(io::trim(id));
  }
  for (auto id : io::split(validation, ',')) {
    if (!io::trim(id).empty()) validation_ids.emplace_back(io::trim(id));
  }
  for (std::size_t i = 0; i < d.scenarios.size(); ++i) {
    const auto& id = d.scenarios[i].id;
    if (d.outputs[i].id != id) throw FormatError(dir.string() + ": output " + d.outputs[i].id + " out of order");
    const bool in_train = std::find(train_ids.begin(), train_ids.end(), id) != train_ids.end();
    const bool in_val = std::find(validation_ids.begin(), validation_ids.end(), id) != validation_ids.end();
    if (in_train == in_val) throw FormatError(dir.string() + ": scenario " + id + " must be in exactly one split");
    d.split.push_back(in_train ? Split::Train : Split::Validation);
  }
  if (train_ids.size() + validation_ids.size() != d.scenarios.size()) {
    throw FormatError(dir.string() + ": split lists name unknown scenarios");
  }
  if (d.digest() != digest) throw FormatError(dir.string() + ": digest mismatch (dataset modified or corrupt)");
  return d;
}

}  // namespace msurr::sampling
