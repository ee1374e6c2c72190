#include "bgd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bgd/error.hpp"

namespace bgd {
namespace {

constexpr std::size_t kVertices = kSimplexDim + 1;

double distance(const SimplexPoint& a, const SimplexPoint& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < kSimplexDim; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double diameter(const std::array<SimplexPoint, kVertices>& x) {
  double d = 0.0;
  for (std::size_t i = 0; i < kVertices; ++i) {
    for (std::size_t j = i + 1; j < kVertices; ++j) d = std::max(d, distance(x[i], x[j]));
  }
  return d;
}

// p = c + t * (q - c)
SimplexPoint along(const SimplexPoint& c, const SimplexPoint& q, double t) {
  SimplexPoint p;
  for (std::size_t i = 0; i < kSimplexDim; ++i) p[i] = c[i] + t * (q[i] - c[i]);
  return p;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const SimplexPoint&)>& objective, const SimplexPoint& start,
                          const SimplexOptions& options, const std::function<void(double)>& on_iteration) {
  auto eval = [&](const SimplexPoint& p) {
    const double v = objective(p);
    if (!std::isfinite(v)) throw Error(Errc::fit_diverged, "non-finite objective value in simplex search");
    return v;
  };

  std::array<SimplexPoint, kVertices> x;
  std::array<double, kVertices> f;
  x[0] = start;
  for (std::size_t i = 0; i < kSimplexDim; ++i) {
    x[i + 1] = start;
    x[i + 1][i] += options.initial_step[i];
  }
  for (std::size_t i = 0; i < kVertices; ++i) f[i] = eval(x[i]);

  std::array<std::size_t, kVertices> order;
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable on ties so the iteration is deterministic.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::array<SimplexPoint, kVertices> xs;
    std::array<double, kVertices> fs;
    for (std::size_t i = 0; i < kVertices; ++i) {
      xs[i] = x[order[i]];
      fs[i] = f[order[i]];
    }
    x = xs;
    f = fs;
  };

  SimplexResult result;
  sort_simplex();
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (diameter(x) < options.diameter_tolerance) {
      result.converged = true;
      break;
    }
    constexpr std::size_t worst = kVertices - 1;
    SimplexPoint centroid{};
    for (std::size_t v = 0; v < worst; ++v) {
      for (std::size_t i = 0; i < kSimplexDim; ++i) centroid[i] += x[v][i] / kSimplexDim;
    }
    const SimplexPoint xr = along(centroid, x[worst], -1.0);
    const double fr = eval(xr);
    if (fr < f[0]) {
      const SimplexPoint xe = along(centroid, x[worst], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        x[worst] = xe;
        f[worst] = fe;
      } else {
        x[worst] = xr;
        f[worst] = fr;
      }
    } else if (fr < f[worst - 1]) {
      x[worst] = xr;
      f[worst] = fr;
    } else {
      const bool outside = fr < f[worst];
      const SimplexPoint xc = outside ? along(centroid, x[worst], -0.5) : along(centroid, x[worst], 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : f[worst])) {
        x[worst] = xc;
        f[worst] = fc;
      } else {
        for (std::size_t v = 1; v < kVertices; ++v) {
          x[v] = along(x[0], x[v], 0.5);
          f[v] = eval(x[v]);
        }
      }
    }
    sort_simplex();
    if (on_iteration) on_iteration(f[0]);
  }
  if (!result.converged && diameter(x) < options.diameter_tolerance) result.converged = true;
  result.best = x[0];
  result.value = f[0];
  result.iterations = iter;
  return result;
}

}  // namespace bgd
