#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace supertask {

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double f_tolerance = 1e-6;  // stop when max |f_i - f_best| falls below this
  int max_iterations = 500;
};

template <std::size_t N>
struct NelderMeadResult {
  std::array<double, N> x{};
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Box-bounded Nelder-Mead minimisation. Every trial point is clamped into
/// [lower, upper]; non-finite objective values count as +infinity.
template <std::size_t N, class F>
NelderMeadResult<N> nelder_mead(F&& f, std::array<double, N> start, const std::array<double, N>& step,
                                const std::array<double, N>& lower, const std::array<double, N>& upper,
                                const NelderMeadOptions& opt = {}) {
  using Point = std::array<double, N>;
  NelderMeadResult<N> res;

  auto clamp = [&](Point p) {
    for (std::size_t i = 0; i < N; ++i) p[i] = std::clamp(p[i], lower[i], upper[i]);
    return p;
  };
  auto eval = [&](const Point& p) {
    ++res.evaluations;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::array<Point, N + 1> xs;
  std::array<double, N + 1> fs;
  xs[0] = clamp(start);
  for (std::size_t i = 0; i < N; ++i) {
    Point p = xs[0];
    p[i] += step[i];
    if (p[i] > upper[i]) p[i] = xs[0][i] - step[i];  // step inward from an upper bound
    xs[i + 1] = clamp(p);
  }
  for (std::size_t i = 0; i <= N; ++i) fs[i] = eval(xs[i]);

  std::array<std::size_t, N + 1> order;
  auto sort = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::array<Point, N + 1> x2;
    std::array<double, N + 1> f2;
    for (std::size_t i = 0; i <= N; ++i) {
      x2[i] = xs[order[i]];
      f2[i] = fs[order[i]];
    }
    xs = x2;
    fs = f2;
  };
  auto lerp = [&](const Point& c, const Point& p, double t) {
    Point out;
    for (std::size_t i = 0; i < N; ++i) out[i] = c[i] + t * (p[i] - c[i]);
    return clamp(out);
  };

  sort();
  while (true) {
    double spread = 0.0;
    for (std::size_t i = 1; i <= N; ++i) spread = std::max(spread, std::abs(fs[i] - fs[0]));
    if (std::isfinite(fs[0]) && spread < opt.f_tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations) break;
    ++res.iterations;

    Point c{};
    for (std::size_t k = 0; k < N; ++k) {
      for (std::size_t i = 0; i < N; ++i) c[i] += xs[k][i] / static_cast<double>(N);
    }
    const Point xr = lerp(c, xs[N], -opt.reflection);
    const double fr = eval(xr);
    if (fr < fs[0]) {
      const Point xe = lerp(c, xr, opt.expansion);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[N] = xe;
        fs[N] = fe;
      } else {
        xs[N] = xr;
        fs[N] = fr;
      }
    } else if (fr < fs[N - 1]) {
      xs[N] = xr;
      fs[N] = fr;
    } else {
      const bool outside = fr < fs[N];
      const Point xc = outside ? lerp(c, xr, opt.contraction) : lerp(c, xs[N], opt.contraction);
      const double fc = eval(xc);
      if (fc < std::min(fr, fs[N])) {
        xs[N] = xc;
        fs[N] = fc;
      } else {
        for (std::size_t k = 1; k <= N; ++k) {
          xs[k] = lerp(xs[0], xs[k], opt.shrink);
          fs[k] = eval(xs[k]);
        }
      }
    }
    sort();
  }
  res.x = xs[0];
  res.f = fs[0];
  return res;
}

}  // namespace supertask
