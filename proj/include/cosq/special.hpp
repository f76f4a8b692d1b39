#pragma once

#include <cmath>
#include <stdexcept>

namespace cosq {

// Regularized incomplete gamma functions for a positive integer shape n.
//
// The upper tail uses the finite Poisson sum
//   Q(n, x) = e^{-x} sum_{k=0}^{n-1} x^k / k!
// and the lower tail the complementary Poisson tail
//   P(n, x) = e^{-x} sum_{k>=n} x^k / k!,
// each evaluated on the side where it is the smaller of the two, so neither
// tail loses relative precision to cancellation.
struct GammaTails {
  double lower;  // P(n, x)
  double upper;  // Q(n, x)
};

namespace detail {

inline double poisson_head(int n, double x) {
  double term = std::exp(-x);
  double sum = term;
  for (int k = 1; k < n; ++k) {
    term *= x / k;
    sum += term;
  }
  return sum;
}

inline double poisson_tail(int n, double x) {
  // first term e^{-x} x^n / n!, built up incrementally to avoid overflow
  double term = std::exp(-x);
  for (int k = 1; k <= n; ++k) term *= x / k;
  double sum = term;
  for (int k = n + 1; k < n + 2000; ++k) {
    term *= x / k;
    sum += term;
    if (term <= sum * 1e-17) break;
  }
  return sum;
}

}  // namespace detail

inline GammaTails gamma_tails(int n, double x) {
  if (n < 1) throw std::domain_error("gamma_tails: shape must be a positive integer");
  if (!(x >= 0.0)) throw std::domain_error("gamma_tails: argument must be nonnegative");
  if (x == 0.0) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};
  if (n == 1) {
    const double upper = std::exp(-x);
    return {-std::expm1(-x), upper};
  }
  // The Poisson median sits near n - 1/3; below it the lower tail is smaller.
  if (x < n) {
    const double lower = detail::poisson_tail(n, x);
    return {lower, 1.0 - lower};
  }
  const double upper = detail::poisson_head(n, x);
  return {1.0 - upper, upper};
}

inline double gamma_q(int n, double x) { return gamma_tails(n, x).upper; }
inline double gamma_p(int n, double x) { return gamma_tails(n, x).lower; }

}  // namespace cosq
