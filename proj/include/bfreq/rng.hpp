#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bfreq {

/// SplitMix64 finalizer; a bijective mixer on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream for (master_seed, path_index, lane). The lane separates
/// the two sides of an experiment so they never share randomness. The
/// derivation is stateless: a path's stream does not depend on which worker
/// simulates it or in which order.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path_index,
                                    std::uint64_t lane = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(master_seed) ^ path_index) + lane * 0x632be59bd9b4e019ULL);
}

/// Per-path random stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master_seed, std::uint64_t path_index, std::uint64_t lane = 0)
      : engine_(derive_seed(master_seed, path_index, lane)) {}

  /// Uniform on the open interval (0,1).
  double uniform() {
    // 53 random mantissa bits, shifted off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bfreq
