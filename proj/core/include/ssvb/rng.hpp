#pragma once

#include <cstdint>
#include <random>

namespace ssvb {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for stream `index` under `master`. Replicates and folds each get their
// own stream so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

// mt19937_64 with its own uniform and normal transforms. The standard
// distributions are implementation-defined, which would make simulated tables
// differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform integer in [0, bound).
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;
  // Standard normal (Marsaglia polar method).
  double normal() noexcept;

  template <typename It>
  void shuffle(It first, It last) noexcept {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto k = uniform_index(i);
      std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(k)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ssvb
