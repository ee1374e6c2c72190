#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bgd {

inline constexpr double kProbEpsilon = 1e-12;
inline constexpr double kDefaultAlpha = 2.0;

/// Empirical first-digit distribution over digits 1..base-1 (probs[d - 1]).
struct DigitPmf {
  int base = 10;
  std::vector<double> probs;
  std::size_t nonzero_count = 0;

  bool degenerate() const { return nonzero_count == 0; }
};

/// Generalized Benford law p(d) = beta * log_b(1 + 1 / (gamma + d^delta)).
struct BenfordParams {
  double beta = 1.0;
  double gamma = 0.0;
  double delta = 1.0;
  int base = 10;
};

struct BenfordFit {
  BenfordParams params;
  double mse = 0.0;  // mean over the base-1 digits
  int iterations = 0;
};

struct DivergenceTriple {
  double js = 0.0;
  double renyi = 0.0;
  double tsallis = 0.0;
  double alpha = kDefaultAlpha;
};

/// Leading digit of |value| in base b, by repeated integer division.
int first_digit(std::int64_t value, int base);

DigitPmf digit_pmf(std::span<const std::int32_t> values, int base);

/// Pointwise generalized law; not renormalized.
std::vector<double> benford_pmf(const BenfordParams& params);

/// Least-squares fit of the generalized law by Nelder-Mead over
/// (log beta, log(gamma + 1e-6), log delta), started at (1, 0, 1).
BenfordFit fit_benford(const DigitPmf& pmf);

/// Sum of squared residuals between pmf and the law at params.
double benford_sse(std::span<const double> pmf, const BenfordParams& params);

double kl_divergence(std::span<const double> q, std::span<const double> p);

/// Symmetrized KL: KL(q|p) + KL(p|q).
double js_divergence(std::span<const double> q, std::span<const double> p);

double s_alpha(std::span<const double> q, std::span<const double> p, double alpha);
double renyi_divergence(std::span<const double> q, std::span<const double> p, double alpha);
double tsallis_divergence(std::span<const double> q, std::span<const double> p, double alpha);

/// Fits the law to pmf and returns the three divergences between pmf and the fit.
DivergenceTriple divergence_triple(const DigitPmf& pmf, double alpha = kDefaultAlpha);

}  // namespace bgd
