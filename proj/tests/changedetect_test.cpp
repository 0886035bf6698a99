#include "conformal/changedetect.hpp"

#include "conformal/betting.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace conformal;

namespace {

// Literal definitions: statistics over explicit capital trajectories with
// segment resets, used as the oracle for the recursive forms.
struct LiteralDetector {
  DetectorProcedure procedure;
  double threshold;
  std::vector<double> capitals{1.0};  // S_0 = 1
  std::size_t segment_start = 0;      // index of tau_{k-1}
  std::vector<std::size_t> alarms;

  double statistic() const {
    const std::size_t n = capitals.size() - 1;
    double stat = procedure == DetectorProcedure::cusum ? 0.0 : 0.0;
    for (std::size_t i = segment_start; i < n; ++i) {
      const double r = capitals[n] / capitals[i];
      if (procedure == DetectorProcedure::cusum)
        stat = std::max(stat, r);
      else
        stat += r;
    }
    return stat;
  }

  bool step(double ratio) {
    capitals.push_back(capitals.back() * ratio);
    const double stat = statistic();
    if (stat >= threshold) {
      const std::size_t n = capitals.size() - 1;
      alarms.push_back(n);
      segment_start = n;
      return true;
    }
    return false;
  }
};

}  // namespace

TEST_CASE("cusum hand-traced example") {
  Detector d(DetectorProcedure::cusum, 5.0);
  CHECK_FALSE(d.step(3.0));  // S: 1 -> 3
  CHECK(d.step(3.0));        // S = 9; max(9/1, 9/3) = 9 >= 5
  CHECK(d.alarms() == std::vector<std::size_t>{2});
}

TEST_CASE("constant martingale never alarms under cusum") {
  Detector d(DetectorProcedure::cusum, 1.5);
  for (int n = 0; n < 1000; ++n) CHECK_FALSE(d.step(1.0));
}

TEST_CASE("decreasing martingale never alarms under cusum") {
  Detector d(DetectorProcedure::cusum, 2.0);
  for (int n = 0; n < 100; ++n) CHECK_FALSE(d.step(0.5));
}

TEST_CASE("sr hand-traced examples") {
  // S == 1: R_n = n, first alarm at n = 5 for c = 5.
  Detector flat(DetectorProcedure::sr, 5.0);
  for (int n = 1; n <= 4; ++n) CHECK_FALSE(flat.step(1.0));
  CHECK(flat.step(1.0));
  CHECK(flat.alarms() == std::vector<std::size_t>{5});

  // S = (1, 2, 4): R_1 = 2, R_2 = 2*(2+1) = 6 >= 5, alarm at n = 2.
  Detector d(DetectorProcedure::sr, 5.0);
  CHECK_FALSE(d.step(2.0));
  CHECK(d.statistic() == doctest::Approx(2.0));
  CHECK(d.step(2.0));
  CHECK(d.alarms() == std::vector<std::size_t>{2});
}

TEST_CASE("statistic restarts from zero after an alarm") {
  std::mt19937_64 rng(31);
  std::lognormal_distribution<double> gen(0.0, 0.4);
  std::vector<double> ratios;
  for (int n = 0; n < 400; ++n) ratios.push_back(gen(rng));
  for (auto proc : {DetectorProcedure::cusum, DetectorProcedure::sr}) {
    Detector whole(proc, 4.0);
    std::size_t first_alarm = 0;
    for (std::size_t n = 0; n < ratios.size(); ++n)
      if (whole.step(ratios[n]) && first_alarm == 0) {
        first_alarm = n + 1;
        CHECK(whole.statistic() == 0.0);
      }
    REQUIRE(first_alarm > 0);
    // A fresh detector fed the post-alarm suffix reproduces the later alarms.
    Detector suffix(proc, 4.0);
    for (std::size_t n = first_alarm; n < ratios.size(); ++n)
      suffix.step(ratios[n]);
    REQUIRE(whole.alarms().size() >= 1);
    const std::vector<std::size_t> later(whole.alarms().begin() + 1, whole.alarms().end());
    std::vector<std::size_t> shifted;
    for (std::size_t tau : suffix.alarms()) shifted.push_back(tau + first_alarm);
    CHECK(later == shifted);
  }
}

TEST_CASE("nonpositive ratios are rejected") {
  Detector d(DetectorProcedure::sr, 2.0);
  CHECK_THROWS_AS(d.step(0.0), std::domain_error);
  CHECK_THROWS_AS(d.step(-1.0), std::domain_error);
  CHECK_THROWS_AS(Detector(DetectorProcedure::sr, 1.0), std::domain_error);
}

TEST_CASE("alarm frequency") {
  CHECK(alarm_frequency({}, 10) == 0.0);
  CHECK(alarm_frequency({5, 12}, 12) == doctest::Approx(2.0 / 12.0));
  CHECK(alarm_frequency({5, 12}, 11) == doctest::Approx(1.0 / 11.0));
  CHECK_THROWS_AS(alarm_frequency({}, 0), std::domain_error);
}

TEST_CASE("recursions match the literal max/sum definitions") {
  std::mt19937_64 rng(17);
  std::lognormal_distribution<double> ratio(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto proc : {DetectorProcedure::cusum, DetectorProcedure::sr}) {
      Detector recursive(proc, 4.0);
      LiteralDetector literal{proc, 4.0};
      for (int n = 0; n < 200; ++n) {
        const double r = ratio(rng);
        const bool a = recursive.step(r);
        const bool b = literal.step(r);
        CHECK(a == b);
        if (recursive.statistic() != 0.0)
          CHECK(recursive.statistic() ==
                doctest::Approx(literal.statistic()).epsilon(1e-9));
      }
      CHECK(recursive.alarms() == literal.alarms);
    }
  }
}

TEST_CASE("sr alarms never later than cusum on shared trajectories") {
  std::mt19937_64 rng(29);
  std::lognormal_distribution<double> ratio(0.0, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    Detector sr(DetectorProcedure::sr, 5.0);
    Detector cusum(DetectorProcedure::cusum, 5.0);
    for (int n = 0; n < 500; ++n) {
      const double r = ratio(rng);
      sr.step(r);
      cusum.step(r);
    }
    const auto& ts = sr.alarms();
    const auto& tc = cusum.alarms();
    CHECK(ts.size() >= tc.size());
    for (std::size_t k = 0; k < tc.size(); ++k) CHECK(ts[k] <= tc[k]);
  }
}

// Detection regression: on a Bernoulli change stream the detector fires
// after the change, faster for stronger post-change bias.
TEST_CASE("detection delay shrinks as the post-change bias grows") {
  auto median_delay = [](double post_bias) {
    std::vector<double> delays;
    for (int seed = 0; seed < 21; ++seed) {
      std::mt19937_64 rng(400 + seed);
      std::uniform_real_distribution<double> u(0, 1);
      HistogramStrategy strategy(10, 2.0);
      Detector d(DetectorProcedure::sr, 30.0);
      // p-values uniform before the change, biased low after it.
      const int change = 200;
      int alarm_at = 4000;
      for (int n = 1; n <= 4000; ++n) {
        double p = u(rng);
        if (n > change) p = std::pow(p, post_bias);  // concentrates near 0
        const double r = strategy.step(p);
        if (r == 0.0) break;
        if (d.step(r) && n > change) {
          alarm_at = n;
          break;
        }
      }
      delays.push_back(alarm_at - change);
    }
    std::sort(delays.begin(), delays.end());
    return delays[delays.size() / 2];
  };
  const double mild = median_delay(2.0);
  const double strong = median_delay(4.0);
  CHECK(strong <= mild);
  CHECK(strong < 3800);
}
