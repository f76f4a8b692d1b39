#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cosq/channel_model.hpp"
#include "cosq/feedback_mapping.hpp"
#include "cosq/nelder_mead.hpp"
#include "cosq/outage_objective.hpp"

namespace cosq {

/// Mapping used when none is given: the tabulated quasi-grey vector, an
/// exhaustive search result for other K <= 8, identity beyond that.
inline BitMapping default_mapping(int K) {
  if (auto preset = preset_mapping(K)) return *preset;
  if (K <= kMaxSearchK) {
    if (auto found = search_quasi_grey(K, 0.1)) return *found;
  }
  return BitMapping::identity(K);
}

/// Minimize outage subject to average transmit power <= snr (linear scale).
struct DesignProblem {
  ChannelSpec spec;
  int K = 1;
  double rho = 0.0;
  BitMapping mapping = BitMapping::identity(1);
  double snr = 1.0;
  TieRule ties = TieRule::toward_higher_power;

  static DesignProblem make(const ChannelSpec& spec, int K, double rho, double snr) {
    return {spec, K, rho, default_mapping(K), snr};
  }
  static DesignProblem make(const ChannelSpec& spec, int K, double rho, double snr, BitMapping mapping) {
    return {spec, K, rho, std::move(mapping), snr};
  }

  void validate() const {
    spec.validate();
    if (K < 1) throw std::invalid_argument("DesignProblem: K must be >= 1");
    if (mapping.size() != K) throw std::invalid_argument("DesignProblem: mapping size differs from K");
    check_crossover(rho);
    if (!(snr > 0.0) || !std::isfinite(snr)) throw std::invalid_argument("DesignProblem: snr must be positive");
  }
  TransitionMatrix transitions() const { return transition_matrix(mapping, rho, ties); }
};

struct DesignOptions {
  NelderMeadOptions simplex{};
  int restarts = 3;
  /// Extra starting codebooks (level vectors), e.g. the design at a neighbouring SNR.
  std::vector<std::vector<double>> warm_starts;
  /// Channel draws for the empirical outage curve when no closed form exists.
  std::uint64_t mc_samples = 200000;
  std::uint64_t mc_seed = 1;
};

struct KktReport {
  double lambda_p = 0.0;
  double stationarity_residual = 0.0;
  std::vector<bool> upper_active;  // P_i == Q_i
  std::vector<bool> lower_active;  // P_i == Q_{i-1}
  /// lambda_i^u - lambda_i^l implied by per-level stationarity (general designs)
  std::vector<double> bound_multipliers;
  std::optional<int> intermediate_index;
  bool levels_bracket_snr = false;  // P_0 <= snr <= P_{K-1}
};

struct DesignResult {
  QuantizerDesign design;
  bool general = false;
  double p_out = 1.0;
  double p_avg = 0.0;
  KktReport kkt;
  int starts_used = 0;
  bool converged = false;
  /// (Q_j - P_j) / P_j for each cell; all zero for simplified designs.
  std::vector<double> boundary_gaps;

  PowerCodebook codebook() const { return {design.levels}; }
  const std::vector<double>& levels() const { return design.levels; }
  double spread() const { return design.levels.back() - design.levels.front(); }
};

namespace detail {

inline constexpr double kMaxLogSpan = 200.0;
inline constexpr double kFeasibleSlack = 1e-12;

// log-offsets of a nondecreasing sequence: c_0 = 0, c_k = c_{k-1} + y_k^2
inline std::vector<double> offsets_from(std::span<const double> y) {
  std::vector<double> c(y.size() + 1, 0.0);
  for (std::size_t k = 0; k < y.size(); ++k) c[k + 1] = std::min(c[k] + y[k] * y[k], kMaxLogSpan);
  return c;
}

inline std::vector<double> params_from(std::span<const double> z) {
  std::vector<double> y(z.size() - 1);
  for (std::size_t k = 1; k < z.size(); ++k) {
    const double r = z[k] / z[k - 1];
    y[k - 1] = (r > 1.0 && std::isfinite(r)) ? std::sqrt(std::log(r)) : 0.0;
  }
  return y;
}

struct Candidate {
  std::vector<double> z;
  Evaluation eval;
  bool converged = true;
};

inline double logit_outage(const Evaluation& e) {
  constexpr double tiny = 1e-300;
  return std::log(std::max(e.p_out, tiny)) - std::log(std::max(e.p_success, tiny));
}

// Sets the common scale s of z = s * exp(c) so that the power constraint is
// met with equality. P_avg is a probability-weighted mean of the levels, so
// P_0 <= P_avg <= P_top: s = snr is never strictly feasible and
// s = snr * exp(-c_top) always is, which brackets the crossing.
template <class Eval>
Candidate fit_scale(const std::vector<double>& c, std::size_t top, double snr, Eval&& eval) {
  std::vector<double> z(c.size());
  auto at = [&](double log_s) {
    for (std::size_t k = 0; k < c.size(); ++k) z[k] = std::exp(log_s + c[k]);
    return eval(z);
  };
  const double limit = snr * (1.0 + kFeasibleSlack);
  double hi = std::log(snr);
  double lo = hi - c[top];
  Evaluation e = at(hi);
  if (e.p_avg <= limit) return {z, e};
  Evaluation e_lo = at(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    e = at(mid);
    if (e.p_avg <= limit) {
      lo = mid;
      e_lo = e;
    } else {
      hi = mid;
    }
  }
  at(lo);
  return {z, e_lo};
}

inline bool better(const Candidate& a, const Candidate& b, double snr) {
  const double tie = 1e-12 * std::max(a.eval.p_out, b.eval.p_out);
  if (a.eval.p_out < b.eval.p_out - tie) return true;
  if (b.eval.p_out < a.eval.p_out - tie) return false;
  const double sa = (a.z.back() - a.z.front()) / snr;
  const double sb = (b.z.back() - b.z.front()) / snr;
  return sa < sb;
}

// Multi-start simplex search over shapes of a nondecreasing sequence z whose
// scale is fixed by the power constraint. `top` is the index of the highest
// power level inside z.
template <class Eval>
Candidate search_shapes(std::size_t dim, std::size_t top, double snr, const std::vector<std::vector<double>>& starts,
                        Eval&& eval, const DesignOptions& opt, int& starts_used) {
  Candidate best;
  bool have = false;
  auto consider = [&](Candidate cand) {
    if (!have || better(cand, best, snr)) {
      best = std::move(cand);
      have = true;
    }
  };
  // all levels at snr: the no-CSIT codebook, evaluated exactly
  {
    std::vector<double> z(dim, snr);
    consider({z, eval(z), true});
  }
  auto objective = [&](const std::vector<double>& y) {
    return logit_outage(fit_scale(offsets_from(y), top, snr, eval).eval);
  };
  for (const auto& y0 : starts) {
    ++starts_used;
    auto nm = nelder_mead(objective, y0, opt.simplex);
    for (int r = 0; r < opt.restarts; ++r) {
      NelderMeadOptions again = opt.simplex;
      again.initial_step = 0.1;
      auto next = nelder_mead(objective, nm.x, again);
      const bool improved = next.f < nm.f - 1e-12 * std::abs(nm.f);
      if (next.f <= nm.f) nm = std::move(next);
      if (!improved) break;
    }
    auto cand = fit_scale(offsets_from(nm.x), top, snr, eval);
    cand.converged = nm.converged;
    consider(std::move(cand));
  }
  return best;
}

inline std::vector<std::vector<double>> ladder_starts(std::size_t n_params) {
  std::vector<std::vector<double>> starts;
  starts.emplace_back(n_params, 0.0);
  if (n_params == 0) return starts;
  // total spreads of 10x .. 1e32x; 1e4x is the [snr/100, 100 snr] ladder
  for (double decades : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double step = decades * std::log(10.0) / static_cast<double>(n_params);
    starts.emplace_back(n_params, std::sqrt(step));
  }
  return starts;
}

template <OutageCurve C>
Candidate optimize_codebook(const TransitionMatrix& tm, const C& curve, int K, double snr,
                            const std::vector<std::vector<double>>& extra, const DesignOptions& opt,
                            int& starts_used) {
  auto eval = [&](const std::vector<double>& z) { return evaluate_simplified(PowerCodebook{z}, tm, curve); };
  auto starts = ladder_starts(static_cast<std::size_t>(K - 1));
  for (const auto& levels : extra)
    if (static_cast<int>(levels.size()) == K) starts.push_back(params_from(levels));
  return search_shapes(static_cast<std::size_t>(K), static_cast<std::size_t>(K - 1), snr, starts, eval, opt,
                       starts_used);
}

inline QuantizerDesign split_interleaved(const std::vector<double>& z) {
  QuantizerDesign d;
  for (std::size_t k = 0; k < z.size(); k += 2) {
    d.levels.push_back(z[k]);
    d.boundaries.push_back(z[k + 1]);
  }
  return d;
}

}  // namespace detail

/// Gradient-based optimality diagnostics.
///
/// For a simplified codebook the level P_k enters both as transmit power and
/// as its own cell boundary; for a general design levels and boundaries are
/// separate coordinates. Coordinates that coincide (merged levels or active
/// P_i = Q_i constraints) are grouped and must be stationary as a block:
/// dP_out + lambda_p dP_avg = 0. lambda_p is the nonnegative least-squares
/// fit and the residual is reported relative to the outage gradient.
template <OutageCurve C>
KktReport kkt_check(const DesignResult& res, const DesignProblem& pb, const C& curve, double rel_step = 1e-4) {
  const auto tm = pb.transitions();
  const auto& P = res.design.levels;
  const auto& Q = res.design.boundaries;
  const int K = static_cast<int>(P.size());
  KktReport rep;
  auto f = [&](double x) { return density(curve, x, rel_step * x); };

  const auto marg = index_marginals(res.design, tm, curve);
  std::vector<double> expected(K + 1, 0.0);  // E_j = sum_i p(i|j) P_i, E_K := E_0
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < K; ++i) expected[j] += tm.at(j, i) * P[i];
  expected[K] = expected[0];
  std::vector<double> down(K + 1, 1.0);  // c_j = sum_{i<j} p(i|j), c_K := 1
  for (int j = 0; j < K; ++j) down[j] = detail::downgrade(tm, j);

  std::vector<double> z, a, b;
  for (int k = 0; k < K; ++k) {
    const double fq = f(Q[k]);
    const double a_q = fq * (tm.at(k, k) + down[k] - down[k + 1]);
    const double b_q = fq * (expected[k] - expected[k + 1]);
    const double a_p = -tm.at(k, k) * f(P[k]);
    const double b_p = marg[k];
    if (!res.general) {
      z.push_back(P[k]);
      a.push_back(a_p + a_q);
      b.push_back(b_p + b_q);
    } else {
      z.insert(z.end(), {P[k], Q[k]});
      a.insert(a.end(), {a_p, a_q});
      b.insert(b.end(), {b_p, b_q});
    }
  }
  std::vector<double> block_a, block_b;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const bool joins = k > 0 && z[k] - z[k - 1] <= 1e-6 * z[k];
    if (!joins) {
      block_a.push_back(0.0);
      block_b.push_back(0.0);
    }
    block_a.back() += a[k];
    block_b.back() += b[k];
  }
  double ab = 0.0, bb = 0.0, aa = 0.0;
  for (std::size_t g = 0; g < block_a.size(); ++g) {
    ab += block_a[g] * block_b[g];
    bb += block_b[g] * block_b[g];
    aa += block_a[g] * block_a[g];
  }
  rep.lambda_p = bb > 0.0 ? std::max(0.0, -ab / bb) : 0.0;
  double rr = 0.0;
  for (std::size_t g = 0; g < block_a.size(); ++g) {
    const double r = block_a[g] + rep.lambda_p * block_b[g];
    rr += r * r;
  }
  const double scale = std::max(std::sqrt(aa), rep.lambda_p * std::sqrt(bb));
  rep.stationarity_residual = scale > 0.0 ? std::sqrt(rr) / scale : 0.0;

  for (int i = 0; i < K; ++i) {
    const double prev_q = i == 0 ? 0.0 : Q[i - 1];
    rep.upper_active.push_back(Q[i] - P[i] <= 1e-6 * P[i]);
    rep.lower_active.push_back(P[i] - prev_q <= 1e-6 * P[i]);
    rep.bound_multipliers.push_back(tm.at(i, i) * f(P[i]) - rep.lambda_p * marg[i]);
  }

  const double lo = pb.snr * (1.0 + 1e-9);
  const double hi = pb.snr * (1.0 - 1e-9);
  rep.levels_bracket_snr = P.front() <= lo && P.back() >= hi;
  if (K >= 2) {
    int sigma = -1;
    for (int j = 0; j <= K - 2; ++j)
      if (P[j] <= lo) sigma = j;
    if (sigma >= 0 && P[sigma + 1] >= hi) rep.intermediate_index = sigma;
  }
  return rep;
}

/// Outage of fixed transmission at power snr, 1 - F(snr).
template <OutageCurve C>
double no_csit_baseline(const C& curve, double snr) {
  if (!(snr > 0.0)) throw std::invalid_argument("no_csit_baseline: snr must be positive");
  return curve.outage(snr);
}

inline double no_csit_baseline(const ChannelSpec& spec, double snr, std::uint64_t mc_samples = 200000,
                               std::uint64_t seed = 1) {
  return no_csit_baseline(OutageModel::for_spec(spec, mc_samples, seed), snr);
}

inline double kkt_step_for(const OutageModel& m) { return m.closed_form() ? 1e-4 : 5e-2; }
template <OutageCurve C>
double kkt_step_for(const C&) {
  return 1e-4;
}

/// Optimal simplified codebook (P_j = Q_j).
///
/// Levels are parametrized as s * exp(c_j) with c_j cumulative squared
/// increments, so ordering holds by construction, and the scale s is solved
/// so that the power constraint is active. A simplex search runs over the
/// increments from the all-equal codebook, geometric ladders, the error-free
/// design and any warm starts; the no-CSIT codebook is always a candidate.
template <OutageCurve C>
DesignResult optimize_levels(const DesignProblem& pb, const C& curve, const DesignOptions& opt = {}) {
  pb.validate();
  const auto tm = pb.transitions();
  DesignResult res;
  std::vector<std::vector<double>> extra = opt.warm_starts;
  if (pb.rho > 0.0 && pb.K > 1) {
    int ignored = 0;
    auto clean = detail::optimize_codebook(TransitionMatrix::identity(pb.K), curve, pb.K, pb.snr, opt.warm_starts,
                                           opt, ignored);
    extra.push_back(clean.z);
    ++res.starts_used;
  }
  auto best = detail::optimize_codebook(tm, curve, pb.K, pb.snr, extra, opt, res.starts_used);
  res.design = {best.z, best.z};
  res.p_out = best.eval.p_out;
  res.p_avg = best.eval.p_avg;
  res.converged = best.converged;
  res.boundary_gaps.assign(pb.K, 0.0);
  res.kkt = kkt_check(res, pb, curve, kkt_step_for(curve));
  return res;
}

inline DesignResult optimize_levels(const DesignProblem& pb, const DesignOptions& opt = {}) {
  return optimize_levels(pb, OutageModel::for_spec(pb.spec, opt.mc_samples, opt.mc_seed), opt);
}

/// Joint optimization of levels and boundaries under Q_{j-1} <= P_j <= Q_j.
/// Same skeleton as optimize_levels over the interleaved sequence
/// P_0 <= Q_0 <= P_1 <= ... <= Q_{K-1}.
template <OutageCurve C>
DesignResult optimize_general(const DesignProblem& pb, const C& curve, const DesignOptions& opt = {}) {
  pb.validate();
  const auto tm = pb.transitions();
  const auto simple = optimize_levels(pb, curve, opt);
  DesignResult res;
  res.general = true;
  res.starts_used = simple.starts_used;

  const std::size_t dim = 2 * static_cast<std::size_t>(pb.K);
  auto eval = [&](const std::vector<double>& z) { return evaluate_general(detail::split_interleaved(z), tm, curve); };

  std::vector<std::vector<double>> starts = detail::ladder_starts(dim - 1);
  for (double gap : {0.0, 0.05, 0.5}) {
    std::vector<double> z;
    for (double p : simple.levels()) z.insert(z.end(), {p, p * (1.0 + gap)});
    // keep the sequence nondecreasing when a gap overtakes the next level
    for (std::size_t k = 1; k < z.size(); ++k) z[k] = std::max(z[k], z[k - 1]);
    starts.push_back(detail::params_from(z));
  }
  auto best = detail::search_shapes(dim, dim - 2, pb.snr, starts, eval, opt, res.starts_used);

  // the simplified optimum is itself a feasible general design
  detail::Candidate from_simple;
  for (double p : simple.levels()) from_simple.z.insert(from_simple.z.end(), {p, p});
  from_simple.eval = eval(from_simple.z);
  from_simple.converged = simple.converged;
  if (detail::better(from_simple, best, pb.snr)) best = from_simple;

  res.design = detail::split_interleaved(best.z);
  res.p_out = best.eval.p_out;
  res.p_avg = best.eval.p_avg;
  res.converged = best.converged;
  for (int j = 0; j < pb.K; ++j)
    res.boundary_gaps.push_back((res.design.boundaries[j] - res.design.levels[j]) / res.design.levels[j]);
  res.kkt = kkt_check(res, pb, curve, kkt_step_for(curve));
  return res;
}

inline DesignResult optimize_general(const DesignProblem& pb, const DesignOptions& opt = {}) {
  return optimize_general(pb, OutageModel::for_spec(pb.spec, opt.mc_samples, opt.mc_seed), opt);
}

}  // namespace cosq
