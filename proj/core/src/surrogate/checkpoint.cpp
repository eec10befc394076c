#include "msurr/surrogate/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "msurr/error.hpp"
#include "msurr/io/text.hpp"

namespace msurr::surrogate {
namespace {

class Writer {
 public:
  void u32(std::uint32_t x) { put(x, 4); }
  void i32(std::int32_t x) { put(static_cast<std::uint32_t>(x), 4); }
  void u64(std::uint64_t x) { put(x, 8); }
  void f64(double x) { put(std::bit_cast<std::uint64_t>(x), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.append(s);
  }
  std::string out;

 private:
  void put(std::uint64_t x, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
  }
};

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  // Element count that must still fit in the remaining bytes.
  std::size_t count(std::size_t element_size) {
    const auto n = u64();
    if (n > (bytes_.size() - pos_) / element_size) throw FormatError("checkpoint is truncated");
    return static_cast<std::size_t>(n);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return x;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Sections covered by model_checksum: features, shape, weights, standardizer.
void write_numeric(Writer& w, const SurrogateModel& m) {
  const auto& s = m.network.shape();
  w.u32(s.cell == CellType::Lstm ? 0 : 1);
  w.i32(s.input);
  w.i32(s.hidden1);
  w.i32(s.hidden2);
  w.i32(s.output);
  w.i32(m.features.rainfall_resolution);
  const auto& p = m.network.parameters();
  w.u64(static_cast<std::uint64_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) w.f64(p[i]);
  w.u64(static_cast<std::uint64_t>(m.standardizer.mean.size()));
  for (Eigen::Index i = 0; i < m.standardizer.mean.size(); ++i) w.f64(m.standardizer.mean[i]);
  for (Eigen::Index i = 0; i < m.standardizer.scale.size(); ++i) w.f64(m.standardizer.scale[i]);
  w.u64(m.standardizer.constant_features.size());
  for (int c : m.standardizer.constant_features) w.i32(c);
}

}  // namespace

std::string serialize_checkpoint(const SurrogateModel& model) {
  model.validate();
  Writer w;
  w.out.append(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  write_numeric(w, model);
  const auto& meta = model.meta;
  w.u64(meta.seed);
  w.i32(meta.epochs);
  w.i32(meta.best_epoch);
  w.str(meta.settings);
  w.str(meta.data_digest);
  w.u64(meta.history.size());
  for (const auto& r : meta.history) {
    w.i32(r.epoch);
    w.f64(r.train_loss);
    w.f64(r.val_loss);
    w.f64(r.val_mse);
  }
  w.u64(io::fnv1a(w.out));
  return std::move(w.out);
}

SurrogateModel deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < kCheckpointMagic.size() || r.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("not a surrogate checkpoint (bad magic)");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  if (bytes.size() < 8 + 8 + 4) throw FormatError("checkpoint is truncated");
  {
    const auto body = bytes.substr(0, bytes.size() - 8);
    Reader trailer(bytes.substr(bytes.size() - 8));
    if (trailer.u64() != io::fnv1a(body)) {
      // Distinguish a cut-off file from bit rot where we can.
      throw FormatError("checkpoint checksum mismatch (truncated or corrupt file)");
    }
  }

  SurrogateModel m;
  NetworkShape shape;
  const auto cell = r.u32();
  if (cell > 1) throw FormatError("checkpoint has an unknown cell type");
  shape.cell = cell == 0 ? CellType::Lstm : CellType::Gru;
  shape.input = r.i32();
  shape.hidden1 = r.i32();
  shape.hidden2 = r.i32();
  shape.output = r.i32();
  m.features.rainfall_resolution = r.i32();
  shape.validate();
  const auto n = r.count(8);  // bounded by the file size, so safe to allocate
  if (static_cast<Eigen::Index>(n) != shape.parameter_count()) {
    throw FormatError("checkpoint parameter count does not match its shape");
  }
  m.network = Network(shape);
  for (std::size_t i = 0; i < n; ++i) m.network.parameters()[static_cast<Eigen::Index>(i)] = r.f64();
  const auto dim = r.count(16);
  m.standardizer.mean.resize(static_cast<Eigen::Index>(dim));
  m.standardizer.scale.resize(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) m.standardizer.mean[static_cast<Eigen::Index>(i)] = r.f64();
  for (std::size_t i = 0; i < dim; ++i) m.standardizer.scale[static_cast<Eigen::Index>(i)] = r.f64();
  const auto constants = r.count(4);
  for (std::size_t i = 0; i < constants; ++i) m.standardizer.constant_features.push_back(r.i32());
  m.meta.seed = r.u64();
  m.meta.epochs = r.i32();
  m.meta.best_epoch = r.i32();
  m.meta.settings = r.str();
  m.meta.data_digest = r.str();
  const auto records = r.count(28);
  for (std::size_t i = 0; i < records; ++i) {
    EpochRecord e;
    e.epoch = r.i32();
    e.train_loss = r.f64();
    e.val_loss = r.f64();
    e.val_mse = r.f64();
    m.meta.history.push_back(e);
  }
  if (r.pos() != bytes.size() - 8) throw FormatError("checkpoint has trailing bytes");
  m.validate();
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const SurrogateModel& model) {
  io::write_file_atomic(path, serialize_checkpoint(model));
}

SurrogateModel load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return deserialize_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string model_checksum(const SurrogateModel& model) {
  Writer w;
  write_numeric(w, model);
  return io::hex64(io::fnv1a(w.out));
}

}  // namespace msurr::surrogate
