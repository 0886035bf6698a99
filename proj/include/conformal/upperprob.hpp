// Exact small-N oracles for upper IID, exchangeability, and conformal
// probabilities on binary sequences.
#pragma once

#include "conformal/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace conformal {

// Exact for n <= 62; callers needing larger n use log_binomial.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  unsigned long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<unsigned long long>(n - k + i) / i;
  return static_cast<double>(r);
}

inline double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// A subset of {0,1}^N, N <= 24, stored as sorted member indices. Bit j
// (least significant) of an index is observation z_{j+1}.
class EventSet {
 public:
  EventSet(int horizon, std::vector<std::uint32_t> members)
      : N_(horizon), members_(std::move(members)) {
    if (horizon < 1 || horizon > 24)
      throw std::domain_error("EventSet: horizon must be in 1..24");
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    if (!members_.empty() && members_.back() >= (1u << N_))
      throw std::domain_error("EventSet: member index out of range for horizon");
    level_counts_.assign(static_cast<std::size_t>(N_) + 1, 0);
    for (std::uint32_t w : members_) ++level_counts_[popcount(w)];
  }

  // Bitstrings read left to right as z_1 z_2 ... z_N.
  static EventSet from_bitstrings(int horizon, const std::vector<std::string>& strings) {
    std::vector<std::uint32_t> members;
    members.reserve(strings.size());
    for (const auto& s : strings) {
      if (static_cast<int>(s.size()) != horizon)
        throw std::domain_error("EventSet: bitstring length does not match horizon");
      std::uint32_t w = 0;
      for (int j = 0; j < horizon; ++j) {
        if (s[j] == '1')
          w |= 1u << j;
        else if (s[j] != '0')
          throw std::domain_error("EventSet: bitstring must contain only 0 and 1");
      }
      members.push_back(w);
    }
    return EventSet(horizon, std::move(members));
  }

  static EventSet full_level(int horizon, int k) {
    std::vector<std::uint32_t> members;
    for (std::uint32_t w = 0; w < (1u << horizon); ++w)
      if (popcount(w) == k) members.push_back(w);
    return EventSet(horizon, std::move(members));
  }

  static int popcount(std::uint32_t w) {
    int c = 0;
    for (; w; w &= w - 1) ++c;
    return c;
  }

  int horizon() const { return N_; }
  const std::vector<std::uint32_t>& members() const { return members_; }
  const std::vector<std::size_t>& level_counts() const { return level_counts_; }
  bool contains_all_zero() const {
    return !members_.empty() && members_.front() == 0;
  }

 private:
  int N_;
  std::vector<std::uint32_t> members_;
  std::vector<std::size_t> level_counts_;  // c_k = |E intersect Omega_k|
};

namespace detail {

// sum_k c_k p^k (1-p)^(N-k); powers built by iterated multiplication, as this
// sits in the inner loop of the grid scan.
inline double bernoulli_mass(const std::vector<std::size_t>& c, int N, double p) {
  double ppow[25], qpow[25];
  ppow[0] = qpow[0] = 1.0;
  const double q = 1.0 - p;
  for (int i = 1; i <= N; ++i) {
    ppow[i] = ppow[i - 1] * p;
    qpow[i] = qpow[i - 1] * q;
  }
  double total = 0.0;
  for (int k = 0; k <= N; ++k)
    if (c[static_cast<std::size_t>(k)] != 0)
      total += static_cast<double>(c[static_cast<std::size_t>(k)]) * ppow[k] * qpow[N - k];
  return total;
}

}  // namespace detail

// sup over p in [0,1] of the event's probability under Bernoulli(p)^N.
// Dense grid scan plus golden-section refinement of the best grid cell to a
// bracket width of 1e-10; endpoints checked exactly.
inline double uiid_prob(const EventSet& E, int grid_points = 10000) {
  const int N = E.horizon();
  const auto& c = E.level_counts();
  if (E.members().empty()) return 0.0;

  double best = std::max(detail::bernoulli_mass(c, N, 0.0),
                         detail::bernoulli_mass(c, N, 1.0));
  int best_i = -1;
  for (int i = 1; i < grid_points; ++i) {
    const double p = static_cast<double>(i) / grid_points;
    const double v = detail::bernoulli_mass(c, N, p);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i < 0) return std::min(best, 1.0);

  // Golden-section maximization over the two grid cells around the best node.
  double a = static_cast<double>(best_i - 1) / grid_points;
  double b = static_cast<double>(best_i + 1) / grid_points;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = detail::bernoulli_mass(c, N, x1);
  double f2 = detail::bernoulli_mass(c, N, x2);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = detail::bernoulli_mass(c, N, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = detail::bernoulli_mass(c, N, x1);
    }
  }
  best = std::max({best, f1, f2});
  return std::min(best, 1.0);
}

// max_k c_k / binom(N,k); exact, since the extreme points of the exchangeable
// measures are the uniform distributions on the levels Omega_k.
inline double uep_prob(const EventSet& E) {
  const int N = E.horizon();
  const auto& c = E.level_counts();
  double best = 0.0;
  for (int k = 0; k <= N; ++k)
    best = std::max(best, static_cast<double>(c[static_cast<std::size_t>(k)]) /
                              binomial(N, k));
  return best;
}

// The martingale from the constructive half of the UCP <= N * UEP bound:
// starts at 1/binom(N,k) and gambles everything on the n-th observation
// matching the target sequence.
class RecklessMartingale {
 public:
  explicit RecklessMartingale(std::vector<int> target) : target_(std::move(target)) {
    if (target_.empty())
      throw std::domain_error("RecklessMartingale: target must be nonempty");
    int k = 0;
    for (int z : target_) {
      if (z != 0 && z != 1)
        throw std::domain_error("RecklessMartingale: target bits must be 0 or 1");
      k += z;
    }
    ones_ = k;
  }

  double initial_capital() const {
    return 1.0 / binomial(static_cast<int>(target_.size()), ones_);
  }

  // The step-n bet as a piecewise-constant density of the p-value. With
  // k_n ones among the target's first n bits: pays n/k_n on [0, k_n/n] when
  // the target bit is 1, n/(n-k_n) on [k_n/n, 1] when it is 0; the boundary
  // point belongs to the paying interval.
  double bet(std::size_t n, double p) const {
    const int kn = prefix_ones(n);
    const double split = static_cast<double>(kn) / static_cast<double>(n);
    if (target_[n - 1] == 1)
      return p <= split ? static_cast<double>(n) / kn : 0.0;
    return p >= split ? static_cast<double>(n) / (static_cast<double>(n) - kn) : 0.0;
  }

  // Exact integral of the step-n bet over [0,1]; equals 1 by construction.
  double bet_integral(std::size_t n) const {
    const int kn = prefix_ones(n);
    const double split = static_cast<double>(kn) / static_cast<double>(n);
    if (target_[n - 1] == 1) return split * (static_cast<double>(n) / kn);
    return (1.0 - split) * (static_cast<double>(n) / (static_cast<double>(n) - kn));
  }

  // Capital after running against an observed binary sequence with the given
  // tie-break draws, using the identity nonconformity measure.
  double run(const std::vector<int>& observed, const std::vector<double>& thetas) const {
    if (observed.size() != target_.size() || thetas.size() != target_.size())
      throw std::domain_error("RecklessMartingale: length mismatch");
    double capital = initial_capital();
    int observed_ones = 0;
    for (std::size_t n = 1; n <= observed.size(); ++n) {
      observed_ones += observed[n - 1];
      // Identity scores on bits: alpha_i = z_i, so the p-value depends only
      // on the counts of ones and zeros seen so far.
      double p;
      if (observed[n - 1] == 1) {
        p = thetas[n - 1] * static_cast<double>(observed_ones) / static_cast<double>(n);
      } else {
        p = (static_cast<double>(observed_ones) +
             thetas[n - 1] * static_cast<double>(n - observed_ones)) /
            static_cast<double>(n);
      }
      capital *= bet(n, p);
      if (capital == 0.0) break;
    }
    return capital;
  }

  const std::vector<int>& target() const { return target_; }

 private:
  int prefix_ones(std::size_t n) const {
    int k = 0;
    for (std::size_t j = 0; j < n; ++j) k += target_[j];
    return k;
  }

  std::vector<int> target_;
  int ones_;
};

// (UEP(E), min(1, sum over members of 1/binom(N, k_omega))): lower and upper
// bounds on upper conformal probability. The upper bound is the total initial
// capital of the positive combination of reckless martingales covering E.
struct UcpBracket {
  double lower = 0.0;
  double upper = 0.0;
};

inline UcpBracket ucp_bracket(const EventSet& E) {
  const int N = E.horizon();
  double cost = 0.0;
  for (std::uint32_t w : E.members())
    cost += 1.0 / binomial(N, EventSet::popcount(w));
  return {uep_prob(E), std::min(1.0, cost)};
}

struct Prop1Report {
  bool first_inequality_ok = true;   // UiidP <= UEP
  bool second_inequality_ok = true;  // UEP <= 1.5 sqrt(N) UiidP
  bool sharper_constant_ok = true;   // UEP <= (sqrt(2 pi) e^(1/6) / 2) sqrt(N) UiidP
  double max_ratio = 0.0;            // max UEP / (sqrt(N) UiidP)
  std::size_t events_checked = 0;
};

inline void prop1_check_event(const EventSet& E, Prop1Report& report) {
  const double uiid = uiid_prob(E);
  const double uep = uep_prob(E);
  const double sqrt_n = std::sqrt(static_cast<double>(E.horizon()));
  // The grid-refined UiidP may undershoot the true supremum by at most the
  // refinement tolerance; allow it that much slack.
  const double slack = 1e-9;
  if (uiid > uep + slack) report.first_inequality_ok = false;
  if (uep > 1.5 * sqrt_n * (uiid + slack)) report.second_inequality_ok = false;
  const double sharper = std::sqrt(2.0 * M_PI) * std::exp(1.0 / 6.0) / 2.0;
  if (uep > sharper * sqrt_n * (uiid + slack)) report.sharper_constant_ok = false;
  if (uiid > 0.0)
    report.max_ratio = std::max(report.max_ratio, uep / (sqrt_n * uiid));
  ++report.events_checked;
}

// Sweeps all single-level events, all singletons, and `random_events` random
// nonempty events of {0,1}^N through both sqrt(N) comparison inequalities.
inline Prop1Report verify_prop1(int N, int random_events, SeededRandomness& rng) {
  Prop1Report report;
  for (int k = 0; k <= N; ++k)
    prop1_check_event(EventSet::full_level(N, k), report);
  for (std::uint32_t w = 0; w < (1u << N); ++w)
    prop1_check_event(EventSet(N, {w}), report);
  for (int t = 0; t < random_events; ++t) {
    std::vector<std::uint32_t> members;
    const double q = rng.uniform();
    for (std::uint32_t w = 0; w < (1u << N); ++w)
      if (rng.uniform() < q) members.push_back(w);
    if (members.empty())
      members.push_back(static_cast<std::uint32_t>(rng.uniform() * (1u << N)) %
                        (1u << N));
    prop1_check_event(EventSet(N, std::move(members)), report);
  }
  return report;
}

struct StirlingReport {
  bool factorial_bracket_ok = true;  // 1/(12n+1) < r_n < 1/(12n) for n <= direct_max
  bool binomial_bound_ok = true;     // binom(N,N/2) 2^-N < N^(-1/2), even N <= N_max
  int direct_max = 0;
  int N_max = 0;
};

// Stirling bracket n! = sqrt(2 pi) n^(n+1/2) e^(-n) e^(r_n) with
// 1/(12n+1) < r_n < 1/(12n), checked directly for n <= 170 (the double
// overflow limit for n!), and the balanced-binomial bound in log space.
inline StirlingReport stirling_checks(int N_max) {
  StirlingReport report;
  report.direct_max = std::min(N_max, 170);
  report.N_max = N_max;
  double factorial = 1.0;
  for (int n = 1; n <= report.direct_max; ++n) {
    factorial *= n;
    // n^(n+1/2) overflows past n ~ 143, so compare in log space; the
    // factorial itself stays below the double limit up to 170.
    const double log_base =
        0.5 * std::log(2.0 * M_PI) + (n + 0.5) * std::log(static_cast<double>(n)) - n;
    const double rn = std::log(factorial) - log_base;
    if (!(rn > 1.0 / (12.0 * n + 1.0) && rn < 1.0 / (12.0 * n)))
      report.factorial_bracket_ok = false;
  }
  for (int N = 2; N <= N_max; N += 2) {
    const double log_lhs = log_binomial(N, N / 2) - N * std::log(2.0);
    if (!(log_lhs < -0.5 * std::log(static_cast<double>(N))))
      report.binomial_bound_ok = false;
  }
  return report;
}

}  // namespace conformal
