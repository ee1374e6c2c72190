#pragma once

#include <array>
#include <cstddef>
#include <functional>

namespace bgd {

inline constexpr std::size_t kSimplexDim = 3;
using SimplexPoint = std::array<double, kSimplexDim>;

struct SimplexOptions {
  double diameter_tolerance = 1e-10;
  int max_iterations = 2000;
  SimplexPoint initial_step{0.5, 0.5, 0.5};
};

struct SimplexResult {
  SimplexPoint best{};
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2) on a 3-D objective.
/// `on_iteration`, if set, receives the best objective value after each iteration.
/// Throws Error{fit_diverged} on a non-finite objective value.
SimplexResult nelder_mead(const std::function<double(const SimplexPoint&)>& objective, const SimplexPoint& start,
                          const SimplexOptions& options = {},
                          const std::function<void(double)>& on_iteration = {});

}  // namespace bgd
