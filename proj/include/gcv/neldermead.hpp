#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gcv/linalg.hpp"

namespace gcv {

/// Derivative-free simplex minimization. Standard coefficients (reflection 1,
/// expansion 2, contraction 0.5, shrink 0.5); restarts with a smaller simplex
/// around the incumbent when the simplex collapses before the iteration
/// budget is spent. Deterministic: no internal randomness.
struct NelderMeadOptions {
  int max_iters = 200;
  double f_tol = 1e-13;
  double x_tol = 1e-13;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  Vec x;
  double f = 0.0;
  int iters = 0;
  int restarts = 0;
};

namespace detail {
struct NullObserver {
  void operator()(const Vec&, double) const {}
};
}  // namespace detail

template <class F, class Observer = detail::NullObserver>
NelderMeadResult nelder_mead(F&& f, const Vec& x0, Vec initial_step,
                             const NelderMeadOptions& opts = {},
                             Observer&& observe = {}) {
  const std::size_t n = x0.size();
  auto eval = [&](const Vec& x) {
    double v = f(x);
    observe(x, v);
    return v;
  };

  NelderMeadResult result;
  result.x = x0;
  result.f = eval(x0);

  if (n == 0) return result;
  if (initial_step.size() != n) initial_step.assign(n, initial_step.empty() ? 0.1 : initial_step[0]);

  std::vector<Vec> simplex;
  std::vector<double> fx;
  double scale = 1.0;

  auto rebuild = [&](const Vec& center) {
    simplex.assign(1, center);
    fx.assign(1, eval(center));
    for (std::size_t j = 0; j < n; ++j) {
      Vec v = center;
      double step = initial_step[j] * scale;
      if (step == 0.0) step = 1e-8;
      v[j] += step;
      simplex.push_back(v);
      fx.push_back(eval(v));
      ++result.iters;
    }
  };

  rebuild(x0);

  std::vector<std::size_t> order(n + 1);
  while (result.iters < opts.max_iters) {
    ++result.iters;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    const std::size_t best = order.front(), worst = order.back();
    const std::size_t second_worst = order[n > 0 ? n - 1 : 0];

    if (fx[best] < result.f) {
      result.f = fx[best];
      result.x = simplex[best];
    }

    // Stagnation: restart around the incumbent with a tighter simplex.
    double fspread = std::abs(fx[worst] - fx[best]);
    double xspread = 0.0;
    for (std::size_t j = 0; j <= n; ++j)
      xspread = std::max(xspread, dist(simplex[j], simplex[best]));
    if (fspread <= opts.f_tol * (1.0 + std::abs(fx[best])) || xspread <= opts.x_tol) {
      scale *= 0.25;
      if (scale < 1e-14) break;
      ++result.restarts;
      rebuild(result.x);
      continue;
    }

    Vec centroid(n, 0.0);
    for (std::size_t j = 0; j <= n; ++j) {
      if (j == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[j][i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coeff) {
      Vec p(n);
      for (std::size_t i = 0; i < n; ++i)
        p[i] = centroid[i] + coeff * (centroid[i] - simplex[worst][i]);
      return p;
    };

    Vec reflected = blend(opts.reflection);
    double fr = eval(reflected);
    if (fr < fx[best]) {
      Vec expanded = blend(opts.reflection * opts.expansion);
      double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        fx[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        fx[worst] = fr;
      }
    } else if (fr < fx[second_worst]) {
      simplex[worst] = std::move(reflected);
      fx[worst] = fr;
    } else {
      bool outside = fr < fx[worst];
      Vec contracted = blend(outside ? opts.reflection * opts.contraction
                                     : -opts.contraction);
      double fc = eval(contracted);
      if (fc < (outside ? fr : fx[worst])) {
        simplex[worst] = std::move(contracted);
        fx[worst] = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t j = 0; j <= n; ++j) {
          if (j == best) continue;
          for (std::size_t i = 0; i < n; ++i)
            simplex[j][i] = simplex[best][i] +
                            opts.shrink * (simplex[j][i] - simplex[best][i]);
          fx[j] = eval(simplex[j]);
        }
      }
    }
  }

  for (std::size_t j = 0; j < simplex.size(); ++j) {
    if (fx[j] < result.f) {
      result.f = fx[j];
      result.x = simplex[j];
    }
  }
  return result;
}

}  // namespace gcv
