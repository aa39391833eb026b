#include "mbpre/rng.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace mbpre {

Rng::Rng(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * path_.size() + 3);
  words.push_back(static_cast<std::uint32_t>(seed_));
  words.push_back(static_cast<std::uint32_t>(seed_ >> 32));
  words.push_back(static_cast<std::uint32_t>(path_.size()));
  for (std::uint64_t p : path_) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

Rng Rng::split(std::uint64_t index) const {
  auto path = path_;
  path.push_back(index);
  return Rng(seed_, std::move(path));
}

unsigned default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_blocks(std::size_t blocks, unsigned threads,
                     const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t b = next++; b < blocks; b = next++) {
        try {
          fn(b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mbpre
