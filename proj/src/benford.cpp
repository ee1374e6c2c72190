#include "bgd/benford.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bgd/error.hpp"
#include "bgd/simplex.hpp"

namespace bgd {
namespace {

constexpr double kGammaShift = 1e-6;
constexpr int kMaxRestarts = 2;

void check_base(int base) {
  if (base < 2) throw Error(Errc::invalid_argument, "base must be >= 2, got " + std::to_string(base));
}

void check_lengths(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) {
    throw Error(Errc::length_mismatch,
                "PMF lengths differ: " + std::to_string(q.size()) + " vs " + std::to_string(p.size()));
  }
}

void check_alpha(double alpha) {
  if (alpha == 1.0) throw Error(Errc::alpha_one, "alpha = 1 is not allowed for Renyi/Tsallis terms");
}

double clamp_prob(double v) { return std::max(v, kProbEpsilon); }

BenfordParams from_search_space(const SimplexPoint& x, int base) {
  BenfordParams p;
  p.beta = std::exp(x[0]);
  p.gamma = std::exp(x[1]) - kGammaShift;
  p.delta = std::exp(x[2]);
  p.base = base;
  return p;
}

// Per-digit evaluation with log(d) hoisted out of the search loop.
struct LawEvaluator {
  int base;
  double inv_log_base;
  std::vector<double> log_digit;

  explicit LawEvaluator(int b) : base(b), inv_log_base(1.0 / std::log(static_cast<double>(b))) {
    log_digit.resize(static_cast<std::size_t>(b - 1));
    for (int d = 1; d < b; ++d) log_digit[d - 1] = std::log(static_cast<double>(d));
  }

  double value(std::size_t i, const BenfordParams& p) const {
    return p.beta * inv_log_base * std::log1p(1.0 / (p.gamma + std::exp(p.delta * log_digit[i])));
  }

  double sse(std::span<const double> target, const BenfordParams& p) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double r = target[i] - value(i, p);
      acc += r * r;
    }
    return acc;
  }
};

}  // namespace

int first_digit(std::int64_t value, int base) {
  check_base(base);
  if (value == 0) throw Error(Errc::zero_value, "first digit of 0 is undefined");
  // Magnitude in unsigned arithmetic so INT64_MIN is handled.
  std::uint64_t mag = value < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(value) : static_cast<std::uint64_t>(value);
  const auto b = static_cast<std::uint64_t>(base);
  while (mag >= b) mag /= b;
  return static_cast<int>(mag);
}

DigitPmf digit_pmf(std::span<const std::int32_t> values, int base) {
  check_base(base);
  DigitPmf pmf;
  pmf.base = base;
  pmf.probs.assign(static_cast<std::size_t>(base - 1), 0.0);
  std::vector<std::size_t> counts(pmf.probs.size(), 0);
  for (const auto v : values) {
    if (v == 0) continue;
    ++counts[first_digit(v, base) - 1];
    ++pmf.nonzero_count;
  }
  if (pmf.nonzero_count == 0) {
    std::fill(pmf.probs.begin(), pmf.probs.end(), 1.0 / static_cast<double>(base - 1));
    return pmf;
  }
  const double total = static_cast<double>(pmf.nonzero_count);
  for (std::size_t i = 0; i < counts.size(); ++i) pmf.probs[i] = static_cast<double>(counts[i]) / total;
  return pmf;
}

std::vector<double> benford_pmf(const BenfordParams& params) {
  check_base(params.base);
  const LawEvaluator law(params.base);
  std::vector<double> out(static_cast<std::size_t>(params.base - 1));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = law.value(i, params);
  return out;
}

double benford_sse(std::span<const double> pmf, const BenfordParams& params) {
  check_base(params.base);
  if (pmf.size() != static_cast<std::size_t>(params.base - 1)) {
    throw Error(Errc::length_mismatch, "PMF length does not match base - 1");
  }
  return LawEvaluator(params.base).sse(pmf, params);
}

BenfordFit fit_benford(const DigitPmf& pmf) {
  check_base(pmf.base);
  if (pmf.probs.size() != static_cast<std::size_t>(pmf.base - 1)) {
    throw Error(Errc::length_mismatch, "PMF length does not match base - 1");
  }
  for (const double v : pmf.probs) {
    if (!std::isfinite(v)) throw Error(Errc::fit_diverged, "PMF contains a non-finite entry");
  }
  const LawEvaluator law(pmf.base);
  const std::span<const double> target(pmf.probs);
  // The PMF is finite, so a non-finite value here means the parameters overflowed far out in the
  // unbounded search space (sparse PMFs push beta and gamma up together). Treat such points as infeasible.
  auto objective = [&](const SimplexPoint& x) {
    const double v = law.sse(target, from_search_space(x, pmf.base));
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  SimplexOptions options;
  const SimplexPoint start{0.0, std::log(2.0 * kGammaShift), 0.0};
  auto result = nelder_mead(objective, start, options);
  int iterations = result.iterations;
  // Restart from the best vertex with a fresh simplex until the objective stops improving;
  // a collapsed simplex can otherwise stall away from a stationary point.
  for (int restart = 0; restart < kMaxRestarts; ++restart) {
    auto again = nelder_mead(objective, result.best, options);
    iterations += again.iterations;
    const bool improved = again.value < result.value;
    if (improved) result = again;
    if (!improved || result.value == 0.0) break;
  }

  BenfordFit fit;
  fit.params = from_search_space(result.best, pmf.base);
  // gamma + 1e-6 is searched in log space, so the raw optimum may sit in (-1e-6, 0).
  fit.params.gamma = std::max(0.0, fit.params.gamma);
  fit.mse = law.sse(target, fit.params) / static_cast<double>(target.size());
  fit.iterations = iterations;
  return fit;
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
  check_lengths(q, p);
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    acc += q[i] * std::log(q[i] / clamp_prob(p[i]));
  }
  return acc;
}

double js_divergence(std::span<const double> q, std::span<const double> p) {
  return kl_divergence(q, p) + kl_divergence(p, q);
}

double s_alpha(std::span<const double> q, std::span<const double> p, double alpha) {
  check_lengths(q, p);
  check_alpha(alpha);
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double qi = q[i];
    if (qi == 0.0) {
      if (alpha > 0.0) continue;
      qi = kProbEpsilon;
    }
    acc += std::pow(qi, alpha) / std::pow(clamp_prob(p[i]), alpha - 1.0);
  }
  return acc;
}

double renyi_divergence(std::span<const double> q, std::span<const double> p, double alpha) {
  const double s_qp = s_alpha(q, p, alpha);
  const double s_pq = s_alpha(p, q, alpha);
  if (!(s_qp > 0.0) || !(s_pq > 0.0) || !std::isfinite(s_qp) || !std::isfinite(s_pq)) {
    throw Error(Errc::non_finite, "S_alpha is not a positive finite number");
  }
  return (std::log(s_qp) + std::log(s_pq)) / (1.0 - alpha);
}

double tsallis_divergence(std::span<const double> q, std::span<const double> p, double alpha) {
  const double s_qp = s_alpha(q, p, alpha);
  const double s_pq = s_alpha(p, q, alpha);
  // 2 - (a + b) keeps the result exactly symmetric in (q, p).
  return (2.0 - (s_qp + s_pq)) / (1.0 - alpha);
}

DivergenceTriple divergence_triple(const DigitPmf& pmf, double alpha) {
  check_alpha(alpha);
  const BenfordFit fit = fit_benford(pmf);
  const auto law = benford_pmf(fit.params);
  DivergenceTriple out;
  out.alpha = alpha;
  out.js = js_divergence(pmf.probs, law);
  out.renyi = renyi_divergence(pmf.probs, law, alpha);
  out.tsallis = tsallis_divergence(pmf.probs, law, alpha);
  if (!std::isfinite(out.js) || !std::isfinite(out.renyi) || !std::isfinite(out.tsallis)) {
    throw Error(Errc::non_finite, "divergence evaluated to a non-finite value");
  }
  return out;
}

}  // namespace bgd
