#include "conformal/upperprob.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace conformal;

TEST_CASE("binomial coefficients") {
  CHECK(binomial(4, 2) == 6.0);
  CHECK(binomial(10, 0) == 1.0);
  CHECK(binomial(10, 10) == 1.0);
  CHECK(binomial(3, 5) == 0.0);
  CHECK(std::exp(log_binomial(20, 10)) == doctest::Approx(binomial(20, 10)).epsilon(1e-9));
}

TEST_CASE("event set bookkeeping") {
  const auto E = EventSet::from_bitstrings(3, {"011", "101", "011"});
  CHECK(E.members().size() == 2);  // duplicate dropped
  CHECK(E.level_counts()[2] == 2);
  CHECK(E.level_counts()[0] == 0);
  CHECK_FALSE(E.contains_all_zero());
  CHECK(EventSet::from_bitstrings(2, {"00"}).contains_all_zero());
  CHECK_THROWS_AS(EventSet::from_bitstrings(3, {"01"}), std::domain_error);
  CHECK_THROWS_AS(EventSet::from_bitstrings(2, {"0x"}), std::domain_error);
}

TEST_CASE("upper IID probability on known events") {
  // Singleton with k ones: (k/N)^k (1-k/N)^(N-k).
  const auto single = EventSet::from_bitstrings(4, {"0110"});
  CHECK(uiid_prob(single) == doctest::Approx(0.25 * 0.25).epsilon(1e-9));

  // Full sample space.
  std::vector<std::uint32_t> all;
  for (std::uint32_t w = 0; w < 16; ++w) all.push_back(w);
  CHECK(uiid_prob(EventSet(4, std::move(all))) == doctest::Approx(1.0));

  // N = 4, E = Omega_2: max of 6 p^2 (1-p)^2 is 6/16 at p = 1/2.
  CHECK(uiid_prob(EventSet::full_level(4, 2)) == doctest::Approx(0.375).epsilon(1e-9));

  // Endpoints are handled exactly.
  CHECK(uiid_prob(EventSet::from_bitstrings(3, {"000"})) == doctest::Approx(1.0));
  CHECK(uiid_prob(EventSet(3, {})) == 0.0);
}

TEST_CASE("upper exchangeability probability") {
  CHECK(uep_prob(EventSet::from_bitstrings(2, {"01"})) == doctest::Approx(0.5));
  CHECK(uep_prob(EventSet(5, {})) == 0.0);
  CHECK(uep_prob(EventSet::full_level(4, 2)) == doctest::Approx(1.0));
}

TEST_CASE("reckless martingale hand-traced cases") {
  // omega = (1): single forced step.
  RecklessMartingale one({1});
  CHECK(one.initial_capital() == doctest::Approx(1.0));
  CHECK(one.run({1}, {0.5}) == doctest::Approx(1.0));

  // omega = (0,1): initial 1/2, multipliers 1 then 2.
  RecklessMartingale zo({0, 1});
  CHECK(zo.initial_capital() == doctest::Approx(0.5));
  CHECK(zo.run({0, 1}, {0.3, 0.8}) == doctest::Approx(1.0));

  // All-ones: every multiplier is n/n = 1.
  RecklessMartingale ones({1, 1, 1, 1, 1});
  CHECK(ones.initial_capital() == doctest::Approx(1.0));
  CHECK(ones.run({1, 1, 1, 1, 1}, {0.1, 0.9, 0.4, 0.6, 0.2}) == doctest::Approx(1.0));
}

TEST_CASE("reckless martingale reaches 1 on its target") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  const int N = 6;
  for (std::uint32_t w = 0; w < (1u << N); ++w) {
    std::vector<int> target(N);
    for (int j = 0; j < N; ++j) target[j] = (w >> j) & 1;
    RecklessMartingale mart(target);
    CHECK(mart.initial_capital() ==
          doctest::Approx(1.0 / binomial(N, EventSet::popcount(w))));

    std::vector<double> thetas(N);
    for (auto& t : thetas) t = 0.01 + 0.98 * u(rng);
    CHECK(mart.run(target, thetas) == doctest::Approx(1.0).epsilon(1e-12));

    // Exact per-step integral of the bet is 1.
    for (int n = 1; n <= N; ++n)
      CHECK(std::abs(mart.bet_integral(n) - 1.0) < 1e-12);
  }
}

TEST_CASE("reckless martingale ruin off the target") {
  // Target (1,0,1), observed deviates at the last step; with theta_3 = 0.9
  // the p-value 0.933 misses the paying interval [0, 2/3] and the capital
  // drops to exactly 0.
  RecklessMartingale mart({1, 0, 1});
  CHECK(mart.run({1, 0, 0}, {0.5, 0.5, 0.9}) == 0.0);
}

// The reckless martingale is a martingale: its expected final capital over
// exchangeable data (Bernoulli(1/2)^N here) and uniform tie-breaks equals
// the initial capital.
TEST_CASE("reckless martingale preserves expected capital") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  const int N = 5;
  RecklessMartingale mart({1, 0, 1, 1, 0});
  const int trials = 200000;
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<int> observed(N);
    std::vector<double> thetas(N);
    for (int j = 0; j < N; ++j) {
      observed[j] = u(rng) < 0.5 ? 1 : 0;
      thetas[j] = u(rng);
    }
    total += mart.run(observed, thetas);
  }
  // Mean final capital ~ initial (1/10); the summand is bounded by 1.
  CHECK(total / trials == doctest::Approx(mart.initial_capital()).epsilon(0.1));
}

TEST_CASE("ucp bracket on known events") {
  // Singleton: tight bracket k!(N-k)!/N!.
  const auto b1 = ucp_bracket(EventSet::from_bitstrings(3, {"010"}));
  CHECK(b1.lower == doctest::Approx(1.0 / 3.0));
  CHECK(b1.upper == doctest::Approx(1.0 / 3.0));

  // Full space: (1,1).
  std::vector<std::uint32_t> all;
  for (std::uint32_t w = 0; w < 8; ++w) all.push_back(w);
  const auto b2 = ucp_bracket(EventSet(3, std::move(all)));
  CHECK(b2.lower == doctest::Approx(1.0));
  CHECK(b2.upper == doctest::Approx(1.0));

  // Two balanced members of a 3-level: tight at 2/3.
  const auto b3 = ucp_bracket(EventSet::from_bitstrings(3, {"011", "101"}));
  CHECK(b3.lower == doctest::Approx(2.0 / 3.0));
  CHECK(b3.upper == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("near-optimal case for the sqrt(N) comparison") {
  // N = 2, E = {(0,1)}: UEP = 1/2, UiidP = 1/4, ratio = sqrt(2).
  const auto E = EventSet::from_bitstrings(2, {"01"});
  const double ratio = uep_prob(E) / (std::sqrt(2.0) * uiid_prob(E));
  CHECK(std::abs(ratio - std::sqrt(2.0)) < 1e-9);
}

TEST_CASE("sqrt(N) inequality sweep at small N") {
  for (int N = 2; N <= 6; ++N) {
    SeededRandomness rng(100 + N);
    const auto report = verify_prop1(N, 200, rng);
    CHECK(report.first_inequality_ok);
    CHECK(report.second_inequality_ok);
    CHECK(report.sharper_constant_ok);
    CHECK(report.max_ratio <= 1.5);
    CHECK(report.events_checked == static_cast<std::size_t>(N + 1) + (1u << N) + 200);
  }
}

TEST_CASE("stirling bracket and balanced binomial bound") {
  const auto report = stirling_checks(1000);
  CHECK(report.factorial_bracket_ok);
  CHECK(report.binomial_bound_ok);
  CHECK(report.direct_max == 170);

  // Spot values: 2 choose 1 over 4 = 0.5 < 1/sqrt(2).
  CHECK(binomial(2, 1) * 0.25 == doctest::Approx(0.5));
  CHECK(0.5 < std::pow(2.0, -0.5));
}
