#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cosq {

struct NelderMeadOptions {
  double f_tol = 1e-10;  // relative spread of simplex values
  double x_tol = 1e-8;   // simplex diameter (max-norm)
  int max_iterations = 2000;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization with the standard
// reflection/expansion/contraction/shrink coefficients (1, 2, 1/2, 1/2).
template <class Objective>
NelderMeadResult nelder_mead(Objective&& objective, std::vector<double> x0, const NelderMeadOptions& opts = {}) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  if (n == 0) {
    res.x = x0;
    res.f = objective(x0);
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = x0[i] != 0.0 ? opts.initial_step * std::max(1.0, std::abs(x0[i])) : opts.initial_step;
    simplex[i + 1][i] += step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = objective(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto point = [&](double t, std::vector<double>& out) {
    const auto& worst = simplex[order[n]];
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (worst[k] - centroid[k]);
  };

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const double f_best = values[order[0]];
    const double f_worst = values[order[n]];
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        diameter = std::max(diameter, std::abs(simplex[order[i]][k] - simplex[order[0]][k]));
    if (std::abs(f_worst - f_best) <= opts.f_tol * (std::abs(f_best) + 1e-300) && diameter <= opts.x_tol) {
      res.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[order[i]][k] / static_cast<double>(n);

    point(-1.0, trial);
    const double f_reflect = objective(trial);
    if (f_reflect < f_best) {
      point(-2.0, trial2);
      const double f_expand = objective(trial2);
      if (f_expand < f_reflect) {
        simplex[order[n]] = trial2;
        values[order[n]] = f_expand;
      } else {
        simplex[order[n]] = trial;
        values[order[n]] = f_reflect;
      }
      continue;
    }
    if (f_reflect < values[order[n - 1]]) {
      simplex[order[n]] = trial;
      values[order[n]] = f_reflect;
      continue;
    }
    const bool outside = f_reflect < f_worst;
    point(outside ? -0.5 : 0.5, trial2);
    const double f_contract = objective(trial2);
    if (f_contract < (outside ? f_reflect : f_worst)) {
      simplex[order[n]] = trial2;
      values[order[n]] = f_contract;
      continue;
    }
    const auto best = simplex[order[0]];
    for (std::size_t i = 1; i <= n; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t k = 0; k < n; ++k) v[k] = best[k] + 0.5 * (v[k] - best[k]);
      values[order[i]] = objective(v);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  res.x = simplex[best];
  res.f = values[best];
  res.iterations = it;
  return res;
}

}  // namespace cosq
