#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace msurr {

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for stream `stream` of a parent seed. Counter-based, so the
/// result does not depend on how many other streams were drawn before.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded random stream. Only the mt19937_64 engine output is used, and all
/// variates are built from it here, so draws are identical across standard
/// library implementations (std::*_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double mean);

  /// Number of whole days survived by an event with daily probability p,
  /// i.e. the count of failures before the first success.
  std::uint64_t geometric(double p);

  std::uint32_t poisson(double lambda);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace msurr
