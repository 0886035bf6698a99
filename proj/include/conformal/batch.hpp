// Batch-mode randomness testing: Bartels's rank version of the von Neumann
// ratio, composition with nonconformity scores, and the median-NCM
// counterexample demonstration.
#pragma once

#include "conformal/core.hpp"
#include "conformal/nonconformity.hpp"
#include "conformal/upperprob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace conformal {

enum class Sidedness { two_sided, left_sided, right_sided };

struct BatchTestResult {
  double statistic = 0.0;    // RVN ratio
  double standardized = 0.0; // (RVN - 2) / sd under the null
  double p_value = 1.0;
  Sidedness sidedness = Sidedness::two_sided;
  std::size_t n = 0;
};

namespace detail {

// Midranks for ties.
inline std::vector<double> midranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace detail

// Bartels's rank von Neumann ratio test. RVN = sum (R_i - R_{i+1})^2 over
// sum (R_i - Rbar)^2; null mean 2, exact null variance
// 4 (n-2) (5n^2 - 2n - 9) / (5 n (n+1) (n-1)^2) (Bartels 1982), p-value from
// the normal approximation (n >= 10).
inline BatchTestResult bartels_rvn(const std::vector<double>& xs,
                                   Sidedness sidedness = Sidedness::two_sided) {
  const std::size_t n = xs.size();
  if (n < 10)
    throw std::domain_error(
        "bartels_rvn: need n >= 10 for the normal approximation; use an "
        "exact/permutation test for smaller samples");
  const auto ranks = detail::midranks(xs);
  const double mean =
      std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(n);
  double numerator = 0.0, denominator = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = ranks[i] - ranks[i + 1];
    numerator += d * d;
  }
  for (double r : ranks) denominator += (r - mean) * (r - mean);
  if (denominator == 0.0)
    throw std::domain_error("bartels_rvn: constant input has no rank variance");

  const double nd = static_cast<double>(n);
  const double rvn = numerator / denominator;
  const double variance =
      4.0 * (nd - 2.0) * (5.0 * nd * nd - 2.0 * nd - 9.0) /
      (5.0 * nd * (nd + 1.0) * (nd - 1.0) * (nd - 1.0));
  const double z = (rvn - 2.0) / std::sqrt(variance);

  BatchTestResult result;
  result.statistic = rvn;
  result.standardized = z;
  result.sidedness = sidedness;
  result.n = n;
  switch (sidedness) {
    case Sidedness::two_sided:
      result.p_value = 2.0 * detail::normal_cdf(-std::abs(z));
      break;
    case Sidedness::left_sided:
      result.p_value = detail::normal_cdf(z);
      break;
    case Sidedness::right_sided:
      result.p_value = detail::normal_cdf(-z);
      break;
  }
  result.p_value = std::min(result.p_value, 1.0);
  if (result.p_value <= 0.0) result.p_value = std::numeric_limits<double>::min();
  return result;
}

// f(A(zs)): a batch test over real sequences applied to nonconformity
// scores; a p-variable for exchangeability whenever A is equivariant.
template <typename BatchTest, typename Scorer>
BatchTestResult compose_p_variable(const BatchTest& f, const Scorer& A,
                                   const std::vector<Observation>& zs) {
  return f(A(zs));
}

struct CounterexampleReport {
  double balanced_fraction = 0.0;  // trials whose score vector has N/2 ones
  double product_bound = 0.0;      // binom(N, N/2) 2^-N
  double sqrt_bound = 0.0;         // N^(-1/2)
};

// Median-NCM pushforward of the uniform product measure concentrates on the
// balanced subset of {0,1}^N, whose probability under any single product
// measure stays below N^(-1/2): composition with a batch exchangeability
// test is not a p-variable for randomness.
inline CounterexampleReport counterexample_demo(int N, int trials,
                                                SeededRandomness& rng) {
  if (N < 2 || N % 2 != 0)
    throw std::domain_error("counterexample_demo: N must be even and >= 2");
  int balanced = 0;
  std::vector<double> zs(static_cast<std::size_t>(N));
  for (int t = 0; t < trials; ++t) {
    for (auto& z : zs) z = rng.uniform();
    const auto alpha = median_ncm(zs);
    const double ones = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    if (ones == N / 2.0) ++balanced;
  }
  CounterexampleReport report;
  report.balanced_fraction = static_cast<double>(balanced) / trials;
  report.product_bound = binomial(N, N / 2) * std::pow(2.0, -N);
  report.sqrt_bound = 1.0 / std::sqrt(static_cast<double>(N));
  return report;
}

}  // namespace conformal
