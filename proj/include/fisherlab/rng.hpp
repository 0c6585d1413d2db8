#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fisherlab {

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Combines seed components into one 64-bit seed:
///   h = splitmix64(a); h = splitmix64(h ^ b); ...
/// Any (master, experiment, cell, replicate) tuple maps to a fixed stream,
/// so a single cell can be reproduced without running its neighbours.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept;
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                       std::uint64_t d) noexcept;

/// Thin wrapper over mt19937_64 with the draws the library needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  void fill_normal(std::span<double> out, double scale = 1.0) {
    for (double& v : out) v = scale * normal();
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace fisherlab
