#pragma once

// Small derivative-free minimizers used by the setting search and the
// Hilbert-Schmidt distance verification.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>

namespace spe::opt {

template <std::size_t N>
struct MinResult {
  std::array<double, N> x{};
  double value = 0.0;
  int iterations = 0;
};

/// Golden-section minimization of f on [lo, hi] down to interval width tol.
template <typename F>
MinResult<1> golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (b - a > tol && it < 500) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  MinResult<1> r;
  r.x[0] = fc < fd ? c : d;
  r.value = std::min(fc, fd);
  r.iterations = it;
  return r;
}

/// Nelder-Mead simplex minimization started at x0 with initial edge length step.
/// Stops when the simplex value spread falls below ftol and its size below xtol.
template <std::size_t N, typename F>
MinResult<N> nelder_mead(F&& f, const std::array<double, N>& x0, double step, double xtol = 1e-10,
                         double ftol = 1e-14, int max_iter = 20000) {
  using Point = std::array<double, N>;
  std::array<Point, N + 1> pts;
  std::array<double, N + 1> vals;
  pts[0] = x0;
  for (std::size_t i = 0; i < N; ++i) {
    pts[i + 1] = x0;
    pts[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= N; ++i) vals[i] = f(pts[i]);

  std::array<std::size_t, N + 1> order;
  int it = 0;
  for (; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order[0], worst = order[N], second = order[N - 1];

    double size = 0.0;
    for (std::size_t i = 0; i <= N; ++i)
      for (std::size_t k = 0; k < N; ++k) size = std::max(size, std::abs(pts[i][k] - pts[best][k]));
    if (vals[worst] - vals[best] <= ftol && size <= xtol) break;

    Point centroid{};
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < N; ++k) centroid[k] += pts[i][k] / static_cast<double>(N);
    }
    auto along = [&](double t) {
      Point p;
      for (std::size_t k = 0; k < N; ++k) p[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return p;
    };

    const Point xr = along(-1.0);
    const double fr = f(xr);
    if (fr < vals[best]) {
      const Point xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Point xc = along(outside ? -0.5 : 0.5);
    const double fcn = f(xc);
    if (fcn < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fcn;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < N; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = f(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], it};
}

}  // namespace spe::opt
