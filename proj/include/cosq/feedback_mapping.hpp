#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cosq {

/// Number of feedback bits needed for K indices, ceil(log2 K).
inline int feedback_bits(int K) {
  if (K < 1) throw std::invalid_argument("feedback_bits: K must be >= 1");
  return static_cast<int>(std::bit_width(static_cast<unsigned>(K - 1)));
}

inline int hamming(std::uint32_t a, std::uint32_t b, int bits) {
  if (bits < 0 || bits > 31) throw std::domain_error("hamming: bit count out of range");
  const std::uint32_t limit = 1u << bits;
  if (a >= limit || b >= limit) throw std::domain_error("hamming: codeword out of range");
  return std::popcount(a ^ b);
}

/// How a received word that is not any index's codeword is demapped when
/// several codewords are equally close.
enum class TieRule {
  toward_higher_power,
  toward_lower_power,
};

/// Injective assignment of quantizer index j to the feedback codeword
/// codewords[j] of feedback_bits(K) bits.
class BitMapping {
 public:
  explicit BitMapping(std::vector<std::uint32_t> codewords) : codewords_(std::move(codewords)) {
    if (codewords_.empty()) throw std::invalid_argument("BitMapping: need at least one index");
    bits_ = feedback_bits(size());
    const std::uint32_t limit = 1u << bits_;
    std::vector<bool> seen(limit, false);
    for (auto c : codewords_) {
      if (c >= limit) throw std::invalid_argument("BitMapping: codeword " + std::to_string(c) + " out of range");
      if (seen[c]) throw std::invalid_argument("BitMapping: codeword " + std::to_string(c) + " repeated");
      seen[c] = true;
    }
  }

  static BitMapping identity(int K) {
    std::vector<std::uint32_t> c(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) c[j] = static_cast<std::uint32_t>(j);
    return BitMapping(std::move(c));
  }

  int size() const { return static_cast<int>(codewords_.size()); }
  int bits() const { return bits_; }
  std::uint32_t operator[](int j) const { return codewords_.at(static_cast<std::size_t>(j)); }
  const std::vector<std::uint32_t>& codewords() const { return codewords_; }

  /// Index the transmitter selects for every possible received word: the
  /// index whose codeword is nearest in Hamming distance.
  std::vector<int> demap_table(TieRule ties = TieRule::toward_higher_power) const {
    const std::uint32_t words = 1u << bits_;
    std::vector<int> table(words);
    for (std::uint32_t w = 0; w < words; ++w) {
      int best = -1;
      int best_d = bits_ + 1;
      for (int i = 0; i < size(); ++i) {
        const int d = std::popcount(w ^ codewords_[i]);
        const bool better = d < best_d || (d == best_d && ties == TieRule::toward_higher_power);
        if (better) {
          best = i;
          best_d = d;
        }
      }
      table[w] = best;
    }
    return table;
  }

  bool operator==(const BitMapping&) const = default;

 private:
  std::vector<std::uint32_t> codewords_;
  int bits_ = 0;
};

/// Index transition probabilities of the feedback link: at(j, i) = p(i | j),
/// the probability that index i reaches the transmitter when j was sent.
class TransitionMatrix {
 public:
  TransitionMatrix(int K, double rho, std::vector<double> p) : K_(K), rho_(rho), p_(std::move(p)) {
    if (p_.size() != static_cast<std::size_t>(K) * K) throw std::invalid_argument("TransitionMatrix: size mismatch");
  }

  static TransitionMatrix identity(int K) {
    std::vector<double> p(static_cast<std::size_t>(K) * K, 0.0);
    for (int j = 0; j < K; ++j) p[j * K + j] = 1.0;
    return {K, 0.0, std::move(p)};
  }
  static TransitionMatrix uniform(int K) {
    return {K, 0.5, std::vector<double>(static_cast<std::size_t>(K) * K, 1.0 / K)};
  }

  int size() const { return K_; }
  double rho() const { return rho_; }
  double at(int sent, int received) const { return p_[static_cast<std::size_t>(sent) * K_ + received]; }
  const std::vector<double>& data() const { return p_; }

  /// sum_{k >= from} p(k | sent)
  double tail(int sent, int from) const {
    double s = 0.0;
    for (int k = from; k < K_; ++k) s += at(sent, k);
    return s;
  }

 private:
  int K_;
  double rho_;
  std::vector<double> p_;
};

inline void check_crossover(double rho) {
  if (!(rho >= 0.0 && rho <= 0.5))
    throw std::domain_error("crossover probability must lie in [0, 0.5]; flip the bits for rho > 0.5");
}

/// Transition matrix induced by b uses of a BSC with crossover rho. Every
/// received word is demapped to its nearest codeword, so when K < 2^b the
/// words outside the mapping still land on some index and rows sum to one.
inline TransitionMatrix transition_matrix(const BitMapping& mapping, double rho,
                                          TieRule ties = TieRule::toward_higher_power) {
  check_crossover(rho);
  const int K = mapping.size();
  const int b = mapping.bits();
  const auto demap = mapping.demap_table(ties);
  std::vector<double> p(static_cast<std::size_t>(K) * K, 0.0);
  for (int j = 0; j < K; ++j) {
    for (std::uint32_t w = 0; w < demap.size(); ++w) {
      const int d = std::popcount(w ^ mapping[j]);
      p[static_cast<std::size_t>(j) * K + demap[w]] += std::pow(rho, d) * std::pow(1.0 - rho, b - d);
    }
  }
  return {K, rho, std::move(p)};
}

enum class QuasiGreyProperty {
  beats_weaker,       // strict: own tail above the tail of any weaker index
  not_below_stronger, // own tail at least the tail of any stronger index
  tails_dominate,     // every tail of j at least the same tail of a weaker l
};

inline constexpr std::string_view property_label(QuasiGreyProperty p) {
  switch (p) {
    case QuasiGreyProperty::beats_weaker: return "beats-weaker";
    case QuasiGreyProperty::not_below_stronger: return "not-below-stronger";
    case QuasiGreyProperty::tails_dominate: return "tails-dominate";
  }
  return "?";
}

struct QuasiGreyViolation {
  QuasiGreyProperty property;
  int j;
  int l;
  int m;  // tail start; equals j except for tails_dominate
};

struct QuasiGreyReport {
  bool pass = true;
  std::vector<QuasiGreyViolation> violations;
};

inline constexpr double kQuasiGreyMargin = 1e-12;

/// Checks the three tail-ordering properties that make the circular,
/// contiguous quantizer optimal:
///   l < j:        sum_{k>=j} p(k|j) >  sum_{k>=j} p(k|l)
///   l > j:        sum_{k>=j} p(k|j) >= sum_{k>=j} p(k|l)
///   l < j, all m: sum_{k>=m} p(k|j) >= sum_{k>=m} p(k|l)
inline QuasiGreyReport check_quasi_grey(const TransitionMatrix& tm) {
  QuasiGreyReport report;
  const int K = tm.size();
  auto fail = [&](QuasiGreyProperty prop, int j, int l, int m) {
    report.pass = false;
    report.violations.push_back({prop, j, l, m});
  };
  for (int j = 0; j < K; ++j) {
    const double own = tm.tail(j, j);
    for (int l = 0; l < K; ++l) {
      if (l == j) continue;
      const double other = tm.tail(l, j);
      if (l < j && !(own - other > kQuasiGreyMargin)) fail(QuasiGreyProperty::beats_weaker, j, l, j);
      if (l > j && !(own - other >= -kQuasiGreyMargin)) fail(QuasiGreyProperty::not_below_stronger, j, l, j);
      if (l < j) {
        for (int m = 0; m < K; ++m)
          if (!(tm.tail(j, m) - tm.tail(l, m) >= -kQuasiGreyMargin)) fail(QuasiGreyProperty::tails_dominate, j, l, m);
      }
    }
  }
  return report;
}

inline QuasiGreyReport is_quasi_grey(const BitMapping& mapping, double rho,
                                     TieRule ties = TieRule::toward_higher_power) {
  if (!(rho > 0.0 && rho <= 0.5)) throw std::domain_error("is_quasi_grey: rho must lie in (0, 0.5]");
  return check_quasi_grey(transition_matrix(mapping, rho, ties));
}

/// Crossover grid used for robust certification. rho = 0.5 is left out: the
/// link is then useless, every row is identical and the strict beats_weaker
/// property cannot hold for any mapping.
inline const std::vector<double>& robust_rho_grid() {
  static const std::vector<double> grid{0.01, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.49};
  return grid;
}

inline bool is_quasi_grey_robust(const BitMapping& mapping, TieRule ties = TieRule::toward_higher_power) {
  for (double rho : robust_rho_grid())
    if (!is_quasi_grey(mapping, rho, ties).pass) return false;
  return true;
}

/// Tabulated index vectors. K = 10 is absent: its tabulated
/// vector repeats a codeword.
inline std::optional<BitMapping> preset_mapping(int K) {
  switch (K) {
    case 1: return BitMapping({0});
    case 2: return BitMapping({0, 1});
    case 3: return BitMapping({0, 2, 1});
    case 4: return BitMapping({0, 3, 2, 1});
    case 6: return BitMapping({0, 3, 5, 1, 2, 4});
    case 8: return BitMapping({0, 3, 6, 5, 2, 7, 1, 4});
    case 12: return BitMapping({0, 7, 2, 8, 4, 9, 5, 11, 1, 3, 6, 10});
    default: return std::nullopt;
  }
}

inline constexpr int kMaxSearchK = 8;

/// Lexicographically smallest codeword sequence with codewords[0] = 0 that is
/// quasi-grey at rho, by exhaustive enumeration of injective assignments.
inline std::optional<BitMapping> search_quasi_grey(int K, double rho, TieRule ties = TieRule::toward_higher_power) {
  if (K < 1) throw std::invalid_argument("search_quasi_grey: K must be >= 1");
  if (K > kMaxSearchK)
    throw std::invalid_argument("search_quasi_grey: K > 8 is too large to enumerate; use the tabulated presets");
  if (!(rho > 0.0 && rho <= 0.5)) throw std::domain_error("search_quasi_grey: rho must lie in (0, 0.5]");
  const int b = feedback_bits(K);
  const std::uint32_t words = 1u << b;
  std::vector<std::uint32_t> current{0};
  std::vector<bool> used(words, false);
  used[0] = true;
  std::optional<BitMapping> found;

  auto recurse = [&](auto&& self) -> bool {
    if (static_cast<int>(current.size()) == K) {
      BitMapping candidate(current);
      if (is_quasi_grey(candidate, rho, ties).pass) {
        found = std::move(candidate);
        return true;
      }
      return false;
    }
    for (std::uint32_t w = 0; w < words; ++w) {
      if (used[w]) continue;
      used[w] = true;
      current.push_back(w);
      if (self(self)) return true;
      current.pop_back();
      used[w] = false;
    }
    return false;
  };
  recurse(recurse);
  return found;
}

}  // namespace cosq
