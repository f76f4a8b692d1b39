#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosq/channel_model.hpp"
#include "cosq/feedback_mapping.hpp"

namespace cosq {

/// Power levels P_j and cell boundaries Q_j of the circular quantizer.
/// Index j is sent when P_R(H) lies in (Q_{j-1}, Q_j] (Q_{-1} = 0); channels
/// beyond Q_{K-1} are in outage regardless and send index 0.
struct QuantizerDesign {
  std::vector<double> levels;
  std::vector<double> boundaries;

  int size() const { return static_cast<int>(levels.size()); }

  /// Throws std::domain_error unless Q_{j-1} <= P_j <= Q_j for every j.
  void validate() const {
    if (levels.empty() || levels.size() != boundaries.size())
      throw std::domain_error("QuantizerDesign: levels and boundaries must be nonempty and equally sized");
    double prev_q = 0.0;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      const double p = levels[j];
      const double q = boundaries[j];
      if (!std::isfinite(p) || !std::isfinite(q))
        throw std::domain_error("QuantizerDesign: non-finite value");
      if (!(prev_q <= p && p <= q))
        throw std::domain_error("QuantizerDesign: interleaving Q_{j-1} <= P_j <= Q_j violated at j=" +
                                std::to_string(j));
      prev_q = q;
    }
  }
};

/// Levels of the simplified design, where every level is its own upper boundary.
struct PowerCodebook {
  std::vector<double> levels;

  int size() const { return static_cast<int>(levels.size()); }
  void validate() const {
    if (levels.empty()) throw std::domain_error("PowerCodebook: empty");
    for (std::size_t j = 0; j < levels.size(); ++j) {
      if (!std::isfinite(levels[j]) || levels[j] < 0.0) throw std::domain_error("PowerCodebook: invalid level");
      if (j > 0 && levels[j] < levels[j - 1]) throw std::domain_error("PowerCodebook: levels must be nondecreasing");
    }
  }
  QuantizerDesign as_design() const { return {levels, levels}; }
  double spread() const { return levels.back() - levels.front(); }
};

/// Outage and success probabilities are computed separately so each keeps
/// relative precision when the other is close to one.
struct Evaluation {
  double p_out = 1.0;
  double p_success = 0.0;
  double p_avg = 0.0;
};

namespace detail {

inline void check_sizes(int K, const TransitionMatrix& tm) {
  if (tm.size() != K) throw std::domain_error("transition matrix size does not match the design");
}

// sum_{i<j} p(i|j): probability that a cell-j channel is sent a weaker level
inline double downgrade(const TransitionMatrix& tm, int j) {
  double s = 0.0;
  for (int i = 0; i < j; ++i) s += tm.at(j, i);
  return s;
}

inline double upgrade(const TransitionMatrix& tm, int j) {
  double s = 0.0;
  for (int i = j + 1; i < tm.size(); ++i) s += tm.at(j, i);
  return s;
}

}  // namespace detail

/// Outage, success and average power of a general (boundary, level) design.
template <OutageCurve C>
Evaluation evaluate_general(const QuantizerDesign& d, const TransitionMatrix& tm, const C& curve) {
  d.validate();
  const int K = d.size();
  detail::check_sizes(K, tm);
  const auto& P = d.levels;
  const auto& Q = d.boundaries;
  const double overflow = curve.outage(Q[K - 1]);

  Evaluation e;
  e.p_out = overflow;
  e.p_success = 0.0;
  std::vector<double> index_prob(K, 0.0);
  for (int i = 0; i < K; ++i) index_prob[i] = overflow * tm.at(0, i);
  double prev_q = 0.0;
  for (int j = 0; j < K; ++j) {
    const double cell = cell_mass(curve, prev_q, Q[j]);
    const double own_fail = cell_mass(curve, P[j], Q[j]);
    const double own_ok = cell_mass(curve, prev_q, P[j]);
    e.p_out += tm.at(j, j) * own_fail + detail::downgrade(tm, j) * cell;
    e.p_success += tm.at(j, j) * own_ok + detail::upgrade(tm, j) * cell;
    for (int i = 0; i < K; ++i) index_prob[i] += cell * tm.at(j, i);
    prev_q = Q[j];
  }
  for (int i = 0; i < K; ++i) e.p_avg += index_prob[i] * P[i];
  e.p_out = std::clamp(e.p_out, 0.0, 1.0);
  e.p_success = std::clamp(e.p_success, 0.0, 1.0);
  return e;
}

template <OutageCurve C>
double outage_general(const QuantizerDesign& d, const TransitionMatrix& tm, const C& curve) {
  return evaluate_general(d, tm, curve).p_out;
}

template <OutageCurve C>
double avg_power_general(const QuantizerDesign& d, const TransitionMatrix& tm, const C& curve) {
  return evaluate_general(d, tm, curve).p_avg;
}

/// Outage, success and average power of a simplified codebook (Q_j = P_j):
///   P_out = [1 - F(P_{K-1})] + sum_i sum_{j>i} p(i|j) [F(P_j) - F(P_{j-1})]
///   P_avg = sum_i { [1 - F(P_{K-1})] p(i|0) + sum_j [F(P_j) - F(P_{j-1})] p(i|j) } P_i
template <OutageCurve C>
Evaluation evaluate_simplified(const PowerCodebook& cb, const TransitionMatrix& tm, const C& curve) {
  cb.validate();
  const int K = cb.size();
  detail::check_sizes(K, tm);
  const auto& P = cb.levels;
  const double overflow = curve.outage(P[K - 1]);

  std::vector<double> delta(K);
  for (int j = 0; j < K; ++j) delta[j] = cell_mass(curve, j == 0 ? 0.0 : P[j - 1], P[j]);

  Evaluation e;
  e.p_out = overflow;
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j) e.p_out += tm.at(j, i) * delta[j];
  e.p_success = 0.0;
  for (int j = 0; j < K; ++j) e.p_success += tm.tail(j, j) * delta[j];

  for (int i = 0; i < K; ++i) {
    double weight = overflow * tm.at(0, i);
    for (int j = 0; j < K; ++j) weight += delta[j] * tm.at(j, i);
    e.p_avg += weight * P[i];
  }
  e.p_out = std::clamp(e.p_out, 0.0, 1.0);
  e.p_success = std::clamp(e.p_success, 0.0, 1.0);
  return e;
}

template <OutageCurve C>
double outage_simplified(const PowerCodebook& cb, const TransitionMatrix& tm, const C& curve) {
  return evaluate_simplified(cb, tm, curve).p_out;
}

template <OutageCurve C>
double avg_power_simplified(const PowerCodebook& cb, const TransitionMatrix& tm, const C& curve) {
  return evaluate_simplified(cb, tm, curve).p_avg;
}

/// Probability that index i reaches the transmitter, for each i.
template <OutageCurve C>
std::vector<double> index_marginals(const QuantizerDesign& d, const TransitionMatrix& tm, const C& curve) {
  const int K = d.size();
  const double overflow = curve.outage(d.boundaries[K - 1]);
  std::vector<double> m(K, 0.0);
  for (int i = 0; i < K; ++i) m[i] = overflow * tm.at(0, i);
  double prev_q = 0.0;
  for (int j = 0; j < K; ++j) {
    const double cell = cell_mass(curve, prev_q, d.boundaries[j]);
    for (int i = 0; i < K; ++i) m[i] += cell * tm.at(j, i);
    prev_q = d.boundaries[j];
  }
  return m;
}

}  // namespace cosq
