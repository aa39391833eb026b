#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace mbpre {

// Splittable random stream. A stream is named by a root seed and a path of
// child indices; every (seed, path) pair seeds its own mt19937_64, so workers
// handed different children draw independent, reproducible sequences.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : Rng(seed, {}) {}

  // Child stream `index` of this stream. Does not advance the parent.
  Rng split(std::uint64_t index) const;

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  std::uint64_t seed() const { return seed_; }

 private:
  Rng(std::uint64_t seed, std::vector<std::uint64_t> path);

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::mt19937_64 engine_;
};

unsigned default_threads();

// Samples handled by one Monte Carlo block. Block b always uses
// Rng(seed).split(b), so estimates do not depend on the worker count.
inline constexpr std::size_t kBlockSize = 8192;

inline std::size_t block_count(std::size_t samples) {
  return (samples + kBlockSize - 1) / kBlockSize;
}

// Calls fn(block) for every block in [0, blocks) using up to `threads`
// workers. fn must only write to per-block storage.
void parallel_blocks(std::size_t blocks, unsigned threads,
                     const std::function<void(std::size_t)>& fn);

}  // namespace mbpre
