#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cosq/parallel.hpp"
#include "cosq/rng.hpp"
#include "cosq/special.hpp"

namespace cosq {

/// Rayleigh block-fading link with t transmit and r receive antennas and a
/// fixed target rate in nats per channel use.
struct ChannelSpec {
  int t = 1;
  int r = 1;
  double rate = 1.0;

  static ChannelSpec siso(double rate) { return {1, 1, rate}; }
  static ChannelSpec miso(int t, double rate) { return {t, 1, rate}; }
  static ChannelSpec simo(int r, double rate) { return {1, r, rate}; }
  static ChannelSpec mimo(int t, int r, double rate) { return {t, r, rate}; }

  void validate() const {
    if (t < 1 || r < 1) throw std::invalid_argument("ChannelSpec: antenna counts must be >= 1");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("ChannelSpec: rate must be positive");
  }
  /// SISO, MISO and SIMO links have a closed-form outage curve.
  bool closed_form() const { return std::min(t, r) == 1; }
  int rank() const { return std::min(t, r); }
  bool operator==(const ChannelSpec&) const = default;
};

/// Eigenvalues of the Gram matrix H H^dagger, sorted descending.
struct EigenSample {
  std::vector<double> eigenvalues;
};

struct OutageEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n_samples = 0;
};

/// Raised when every eigenvalue is zero: no finite power reaches the rate.
class DeepFadeError : public std::domain_error {
 public:
  DeepFadeError() : std::domain_error("channel in deep fade: inversion power is infinite") {}
};

inline void check_eigenvalues(std::span<const double> eigs) {
  for (double e : eigs)
    if (!(e >= 0.0)) throw std::domain_error("eigenvalues must be nonnegative");
}

/// Sum over eigenmodes of log(1 + lambda * power / t), in nats.
inline double mutual_information(std::span<const double> eigs, double power, int t) {
  if (!(power >= 0.0)) throw std::domain_error("mutual_information: power must be nonnegative");
  if (t < 1) throw std::domain_error("mutual_information: t must be >= 1");
  check_eigenvalues(eigs);
  double sum = 0.0;
  for (double e : eigs) sum += std::log1p(e * power / t);
  return sum;
}

/// Minimum transmit power with mutual_information(eigs, P, t) == rate.
///
/// The mutual information is increasing and concave in P, so the root is
/// unique. Newton iterates started left of the root climb monotonically; a
/// bisection bracket guards every step anyway.
inline double inversion_power(std::span<const double> eigs, double rate, int t) {
  if (!(rate > 0.0)) throw std::domain_error("inversion_power: rate must be positive");
  if (t < 1) throw std::domain_error("inversion_power: t must be >= 1");
  check_eigenvalues(eigs);
  double lam_max = 0.0;
  std::size_t active = 0;
  for (double e : eigs) {
    lam_max = std::max(lam_max, e);
    if (e > 0.0) ++active;
  }
  if (lam_max <= 0.0) throw DeepFadeError();
  if (active == 1) return t * std::expm1(rate) / lam_max;

  const double n = static_cast<double>(active);
  // I(P) >= log(1 + lam_max P/t) and I(P) <= n log(1 + lam_max P/t)
  double hi = t * std::expm1(rate) / lam_max;
  double lo = t * std::expm1(rate / n) / lam_max;
  double p = lo;
  for (int it = 0; it < 200; ++it) {
    double f = -rate;
    double df = 0.0;
    for (double e : eigs) {
      const double g = e / t;
      f += std::log1p(g * p);
      df += g / (1.0 + g * p);
    }
    if (std::abs(f) <= 1e-15 * rate) return p;
    if (f < 0.0)
      lo = p;
    else
      hi = p;
    double next = p - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return next;
    p = next;
  }
  return p;
}

// --- closed-form outage curve ---------------------------------------------

/// Pr[I(P) >= R] and its complement for links with min(t, r) = 1.
/// The single nonzero eigenvalue is Gamma(max(t, r), 1); MISO spreads power
/// over t antennas, hence the threshold t (e^R - 1) / P.
struct ClosedFormCurve {
  ChannelSpec spec;

  explicit ClosedFormCurve(ChannelSpec s) : spec(s) {
    spec.validate();
    if (!spec.closed_form()) throw std::domain_error("closed-form outage needs min(t, r) = 1; use Monte Carlo");
  }

  GammaTails tails(double power) const {
    if (!(power >= 0.0)) throw std::domain_error("outage curve: power must be nonnegative");
    if (power == 0.0) return {1.0, 0.0};
    const int shape = std::max(spec.t, spec.r);
    const double x = spec.t * std::expm1(spec.rate) / power;
    return gamma_tails(shape, x);
  }
  /// F(P): probability that power P supports the rate.
  double success(double power) const { return tails(power).upper; }
  /// 1 - F(P), the outage probability at fixed power P.
  double outage(double power) const { return tails(power).lower; }
};

inline OutageEstimate comp_outage_closed(double power, const ChannelSpec& spec) {
  return {ClosedFormCurve(spec).success(power), 0.0, 0};
}

// --- channel sampling -------------------------------------------------------

namespace detail {

// Eigenvalues of a real symmetric matrix (row-major, n x n) by cyclic Jacobi.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  double frob = 0.0;
  for (double v : a) frob += v * v;
  frob = std::sqrt(frob);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * at(i, j) * at(i, j);
    if (std::sqrt(off) <= 1e-12 * frob) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double tn = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tn * tn + 1.0);
        const double s = tn * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = at(i, i);
  return out;
}

}  // namespace detail

/// Eigenvalues of a Hermitian matrix given row-major, sorted descending and
/// clamped at zero. Uses the quadratic formula for 2x2 and cyclic Jacobi on
/// the real 2n x 2n embedding [[A, -B], [B, A]] otherwise (each eigenvalue
/// appears twice there).
inline std::vector<double> hermitian_eigenvalues(std::span<const std::complex<double>> w, std::size_t n) {
  std::vector<double> eig;
  if (n == 1) {
    eig = {w[0].real()};
  } else if (n == 2) {
    const double a = w[0].real();
    const double d = w[3].real();
    const double b2 = std::norm(w[1]);
    const double half_tr = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b2);
    const double l1 = half_tr + disc;
    const double det = a * d - b2;
    const double l2 = l1 > 0.0 ? det / l1 : half_tr - disc;
    eig = {l1, l2};
  } else {
    const std::size_t m = 2 * n;
    std::vector<double> emb(m * m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto z = w[i * n + j];
        emb[i * m + j] = z.real();
        emb[(i + n) * m + (j + n)] = z.real();
        emb[i * m + (j + n)] = -z.imag();
        emb[(i + n) * m + j] = z.imag();
      }
    }
    auto all = detail::jacobi_eigenvalues(std::move(emb), m);
    std::sort(all.begin(), all.end(), std::greater<>());
    for (std::size_t i = 0; i < m; i += 2) eig.push_back(0.5 * (all[i] + all[i + 1]));
  }
  for (double& e : eig) e = std::max(e, 0.0);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

/// Draws an r x t channel with i.i.d. CN(0, 1) entries (variance 0.5 per
/// real dimension), row-major.
inline std::vector<std::complex<double>> sample_channel_matrix(const ChannelSpec& spec, Engine& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<std::complex<double>> h(static_cast<std::size_t>(spec.r) * spec.t);
  for (auto& z : h) {
    const double re = normal(rng);
    const double im = normal(rng);
    z = {re, im};
  }
  return h;
}

/// Eigenvalues of the min(r,t)-dimensional Gram matrix of a row-major r x t channel.
inline EigenSample gram_eigenvalues(std::span<const std::complex<double>> h, int r, int t) {
  const std::size_t n = static_cast<std::size_t>(std::min(r, t));
  std::vector<std::complex<double>> w(n * n);
  if (r <= t) {
    // H H^dagger
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::complex<double> s{};
        for (int k = 0; k < t; ++k) s += h[i * t + k] * std::conj(h[j * t + k]);
        w[i * n + j] = s;
      }
  } else {
    // H^dagger H
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::complex<double> s{};
        for (int k = 0; k < r; ++k) s += std::conj(h[k * t + i]) * h[k * t + j];
        w[i * n + j] = s;
      }
  }
  return {hermitian_eigenvalues(w, n)};
}

inline EigenSample sample_channel(const ChannelSpec& spec, Engine& rng) {
  if (spec.rank() == 1) {
    // Only the squared Frobenius norm matters for a rank-one channel.
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    double s = 0.0;
    for (int k = 0; k < spec.r * spec.t; ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      s += re * re + im * im;
    }
    return {{s}};
  }
  const auto h = sample_channel_matrix(spec, rng);
  return gram_eigenvalues(h, spec.r, spec.t);
}

/// Inversion power of a freshly drawn channel.
inline double sample_inversion_power(const ChannelSpec& spec, Engine& rng) {
  for (;;) {
    const auto eig = sample_channel(spec, rng);
    try {
      return inversion_power(eig.eigenvalues, spec.rate, spec.t);
    } catch (const DeepFadeError&) {
      // probability zero under the model; redraw
    }
  }
}

/// Monte Carlo estimate of F(P) = Pr[P_R(H) <= P].
inline OutageEstimate comp_outage_mc(double power, const ChannelSpec& spec, std::uint64_t n_samples,
                                     std::uint64_t seed) {
  spec.validate();
  if (n_samples < 1) throw std::invalid_argument("comp_outage_mc: n_samples must be >= 1");
  if (!(power >= 0.0)) throw std::domain_error("comp_outage_mc: power must be nonnegative");
  const auto counts = run_shards<std::uint64_t>(shard_count(n_samples), [&](std::uint64_t shard) {
    auto rng = make_engine(seed, Stream::channel, shard);
    std::uint64_t hits = 0;
    const auto len = shard_length(n_samples, shard);
    for (std::uint64_t i = 0; i < len; ++i)
      if (sample_inversion_power(spec, rng) <= power) ++hits;
    return hits;
  });
  std::uint64_t hits = 0;
  for (auto c : counts) hits += c;
  const double n = static_cast<double>(n_samples);
  const double p = hits / n;
  return {p, std::sqrt(p * (1.0 - p) / n), n_samples};
}

/// Empirical outage curve from one fixed set of channel draws (common random
/// numbers), so repeated evaluations during optimization are deterministic.
class EmpiricalCurve {
 public:
  EmpiricalCurve(const ChannelSpec& spec, std::uint64_t n_samples, std::uint64_t seed) : spec_(spec) {
    spec.validate();
    if (n_samples < 1) throw std::invalid_argument("EmpiricalCurve: n_samples must be >= 1");
    auto shards = run_shards<std::vector<double>>(shard_count(n_samples), [&](std::uint64_t shard) {
      auto rng = make_engine(seed, Stream::outage_curve, shard);
      std::vector<double> v(shard_length(n_samples, shard));
      for (auto& p : v) p = sample_inversion_power(spec, rng);
      return v;
    });
    for (auto& s : shards) powers_.insert(powers_.end(), s.begin(), s.end());
    std::sort(powers_.begin(), powers_.end());
  }

  double success(double power) const {
    return static_cast<double>(count_at_most(power)) / static_cast<double>(powers_.size());
  }
  double outage(double power) const {
    return static_cast<double>(powers_.size() - count_at_most(power)) / static_cast<double>(powers_.size());
  }
  std::size_t size() const { return powers_.size(); }
  const ChannelSpec& spec() const { return spec_; }

 private:
  std::size_t count_at_most(double power) const {
    if (!(power >= 0.0)) throw std::domain_error("outage curve: power must be nonnegative");
    return static_cast<std::size_t>(std::upper_bound(powers_.begin(), powers_.end(), power) - powers_.begin());
  }
  ChannelSpec spec_;
  std::vector<double> powers_;
};

/// Anything that reports F(P) and 1 - F(P) with full relative precision on both sides.
template <class C>
concept OutageCurve = requires(const C& c, double p) {
  { c.success(p) } -> std::convertible_to<double>;
  { c.outage(p) } -> std::convertible_to<double>;
};

/// Closed form when the link allows it, Monte Carlo otherwise.
class OutageModel {
 public:
  explicit OutageModel(ClosedFormCurve c) : impl_(std::move(c)) {}
  explicit OutageModel(EmpiricalCurve c) : impl_(std::move(c)) {}

  static OutageModel for_spec(const ChannelSpec& spec, std::uint64_t mc_samples = 200000,
                              std::uint64_t seed = 1) {
    if (spec.closed_form()) return OutageModel(ClosedFormCurve(spec));
    return OutageModel(EmpiricalCurve(spec, mc_samples, seed));
  }

  double success(double p) const {
    return std::visit([p](const auto& c) { return c.success(p); }, impl_);
  }
  double outage(double p) const {
    return std::visit([p](const auto& c) { return c.outage(p); }, impl_);
  }
  bool closed_form() const { return std::holds_alternative<ClosedFormCurve>(impl_); }

 private:
  std::variant<ClosedFormCurve, EmpiricalCurve> impl_;
};

/// Probability mass F(hi) - F(lo), taken from whichever tail avoids cancellation.
template <OutageCurve C>
double cell_mass(const C& curve, double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (lo <= 0.0) return curve.success(hi);
  const double f_lo = curve.success(lo);
  if (f_lo < 0.5) return std::max(0.0, curve.success(hi) - f_lo);
  return std::max(0.0, curve.outage(lo) - curve.outage(hi));
}

/// Central finite difference of F; a diagnostic for KKT reports.
template <OutageCurve C>
double density(const C& curve, double power, double h) {
  if (!(h > 0.0) || !(h < power)) throw std::domain_error("density: need 0 < h < power");
  return cell_mass(curve, power - h, power + h) / (2.0 * h);
}

inline double outage_density(double power, const ChannelSpec& spec, double h) {
  return density(ClosedFormCurve(spec), power, h);
}

}  // namespace cosq
