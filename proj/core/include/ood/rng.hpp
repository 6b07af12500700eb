#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ood {

/// Platform-independent seeded generator.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard. The
/// standard distributions are implementation-defined, so bounded integers and
/// unit reals are derived from raw 64-bit draws here instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 bits of precision.
  double uniform();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// Seed for an independent sub-stream, e.g. one per fold or restart.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ood
