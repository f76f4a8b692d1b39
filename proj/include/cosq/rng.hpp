#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cosq {

// Every random stream in the library is an mt19937_64 keyed by
// (seed, purpose, shard) through std::seed_seq, so streams for different
// purposes and shards never share state and a shard's output does not depend
// on how many workers process the shards.
using Engine = std::mt19937_64;

inline constexpr std::string_view kGeneratorName = "mt19937_64/seed_seq(seed,stream,shard)";

enum class Stream : std::uint32_t {
  channel = 1,
  feedback = 2,
  outage_curve = 3,
};

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t shard = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(shard),
                    static_cast<std::uint32_t>(shard >> 32)};
  return Engine(seq);
}

}  // namespace cosq
