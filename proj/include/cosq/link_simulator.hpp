#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "cosq/channel_model.hpp"
#include "cosq/feedback_mapping.hpp"
#include "cosq/outage_objective.hpp"
#include "cosq/parallel.hpp"
#include "cosq/rng.hpp"

namespace cosq {

struct SimReport {
  double p_out_hat = 0.0;
  double p_out_stderr = 0.0;
  double p_avg_hat = 0.0;
  double p_avg_stderr = 0.0;
  std::vector<std::uint64_t> index_histogram_tx;  // index chosen by the receiver
  std::vector<std::uint64_t> index_histogram_rx;  // index seen by the transmitter
  std::uint64_t n_trials = 0;
  std::uint64_t seed = 0;
  bool operator==(const SimReport&) const = default;
};

/// Receiver-side quantization of the inversion power: j for p_r in
/// (Q_{j-1}, Q_j], and index 0 beyond Q_{K-1}, where outage is certain and
/// the cheapest level wastes the least power.
inline int quantize(double p_r, const QuantizerDesign& design) {
  if (!(p_r > 0.0)) throw std::domain_error("quantize: inversion power must be positive");
  for (int j = 0; j < design.size(); ++j)
    if (p_r <= design.boundaries[j]) return j;
  return 0;
}

namespace detail {

// sends `codeword` over `bits` uses of a BSC
inline std::uint32_t corrupt(std::uint32_t codeword, int bits, std::bernoulli_distribution& flip, Engine& rng) {
  for (int k = 0; k < bits; ++k)
    if (flip(rng)) codeword ^= (1u << k);
  return codeword;
}

struct SimShard {
  std::uint64_t outages = 0;
  double power_sum = 0.0;
  double power_sq_sum = 0.0;
  std::vector<std::uint64_t> tx, rx;
};

}  // namespace detail

/// Closed-loop Monte Carlo of the whole chain: channel draw, quantization,
/// bit-mapping, BSC corruption, demapping, power selection and the outage
/// test P_i >= P_R(H). Channel and feedback noise use separate streams.
inline SimReport simulate(const QuantizerDesign& design, const BitMapping& mapping, double rho, const ChannelSpec& spec,
                          std::uint64_t n_trials, std::uint64_t seed, TieRule ties = TieRule::toward_higher_power) {
  design.validate();
  spec.validate();
  check_crossover(rho);
  if (mapping.size() != design.size()) throw std::invalid_argument("simulate: mapping size differs from design");
  if (n_trials < 1) throw std::invalid_argument("simulate: n_trials must be >= 1");
  const int K = design.size();
  const auto demap = mapping.demap_table(ties);

  auto shards = run_shards<detail::SimShard>(shard_count(n_trials), [&](std::uint64_t shard) {
    auto ch_rng = make_engine(seed, Stream::channel, shard);
    auto fb_rng = make_engine(seed, Stream::feedback, shard);
    std::bernoulli_distribution flip(rho);
    detail::SimShard s;
    s.tx.assign(K, 0);
    s.rx.assign(K, 0);
    const auto len = shard_length(n_trials, shard);
    for (std::uint64_t n = 0; n < len; ++n) {
      const double p_r = sample_inversion_power(spec, ch_rng);
      const int j = quantize(p_r, design);
      const int i = demap[detail::corrupt(mapping[j], mapping.bits(), flip, fb_rng)];
      const double power = design.levels[i];
      if (power < p_r) ++s.outages;
      s.power_sum += power;
      s.power_sq_sum += power * power;
      ++s.tx[j];
      ++s.rx[i];
    }
    return s;
  });

  SimReport rep;
  rep.n_trials = n_trials;
  rep.seed = seed;
  rep.index_histogram_tx.assign(K, 0);
  rep.index_histogram_rx.assign(K, 0);
  std::uint64_t outages = 0;
  double sum = 0.0, sq = 0.0;
  for (const auto& s : shards) {
    outages += s.outages;
    sum += s.power_sum;
    sq += s.power_sq_sum;
    for (int k = 0; k < K; ++k) {
      rep.index_histogram_tx[k] += s.tx[k];
      rep.index_histogram_rx[k] += s.rx[k];
    }
  }
  const double n = static_cast<double>(n_trials);
  rep.p_out_hat = outages / n;
  rep.p_out_stderr = std::sqrt(rep.p_out_hat * (1.0 - rep.p_out_hat) / n);
  rep.p_avg_hat = sum / n;
  const double var = n > 1 ? std::max(0.0, (sq - sum * sum / n) / (n - 1.0)) : 0.0;
  rep.p_avg_stderr = std::sqrt(var / n);
  return rep;
}

/// Row-normalized frequencies of the index seen by the transmitter, with
/// n_trials feedback transmissions per source index.
inline std::vector<double> empirical_transition(const BitMapping& mapping, double rho, std::uint64_t n_trials,
                                                std::uint64_t seed, TieRule ties = TieRule::toward_higher_power) {
  check_crossover(rho);
  if (n_trials < 1) throw std::invalid_argument("empirical_transition: n_trials must be >= 1");
  const int K = mapping.size();
  const auto demap = mapping.demap_table(ties);
  std::vector<double> table(static_cast<std::size_t>(K) * K, 0.0);
  for (int j = 0; j < K; ++j) {
    auto counts = run_shards<std::vector<std::uint64_t>>(shard_count(n_trials), [&](std::uint64_t shard) {
      auto rng = make_engine(seed, Stream::feedback, (static_cast<std::uint64_t>(j) << 32) | shard);
      std::bernoulli_distribution flip(rho);
      std::vector<std::uint64_t> c(K, 0);
      const auto len = shard_length(n_trials, shard);
      for (std::uint64_t n = 0; n < len; ++n) ++c[demap[detail::corrupt(mapping[j], mapping.bits(), flip, rng)]];
      return c;
    });
    std::vector<std::uint64_t> row(K, 0);
    for (const auto& c : counts)
      for (int i = 0; i < K; ++i) row[i] += c[i];
    for (int i = 0; i < K; ++i) table[static_cast<std::size_t>(j) * K + i] = static_cast<double>(row[i]) / n_trials;
  }
  return table;
}

}  // namespace cosq
