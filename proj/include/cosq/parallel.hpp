#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cosq {

// Trials are split into fixed-size shards; each shard owns its own random
// stream, so merged results are identical for any worker count.
inline constexpr std::uint64_t kShardSize = 1u << 16;

inline std::uint64_t shard_count(std::uint64_t n_trials) { return (n_trials + kShardSize - 1) / kShardSize; }

inline std::uint64_t shard_length(std::uint64_t n_trials, std::uint64_t shard) {
  const std::uint64_t begin = shard * kShardSize;
  return std::min<std::uint64_t>(kShardSize, n_trials - begin);
}

// Runs fn(shard) for every shard and returns the results in shard order.
template <class Result, class Fn>
std::vector<Result> run_shards(std::uint64_t n_shards, Fn&& fn, unsigned workers = 0) {
  std::vector<Result> out(n_shards);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_shards));
  if (workers <= 1) {
    for (std::uint64_t s = 0; s < n_shards; ++s) out[s] = fn(s);
    return out;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t s = next++; s < n_shards; s = next++) {
        try {
          out[s] = fn(s);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace cosq
