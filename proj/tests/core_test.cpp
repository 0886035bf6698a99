#include "conformal/core.hpp"

#include <doctest.h>

#include <cmath>

using namespace conformal;

TEST_CASE("jeffreys scale maps thresholds to the lower category") {
  CHECK(jeffreys_category(0.5) == EvidenceCategory::supports_null);
  CHECK(jeffreys_category(1.0) == EvidenceCategory::supports_null);
  CHECK(jeffreys_category(2.0) == EvidenceCategory::bare_mention);
  CHECK(jeffreys_category(std::sqrt(10.0)) == EvidenceCategory::bare_mention);
  CHECK(jeffreys_category(5.0) == EvidenceCategory::substantial);
  CHECK(jeffreys_category(10.0) == EvidenceCategory::substantial);
  CHECK(jeffreys_category(20.0) == EvidenceCategory::strong);
  CHECK(jeffreys_category(50.0) == EvidenceCategory::very_strong);
  CHECK(jeffreys_category(100.0) == EvidenceCategory::very_strong);
  CHECK(jeffreys_category(100.50) == EvidenceCategory::decisive);
}

TEST_CASE("jeffreys scale rejects non-positive and non-finite values") {
  CHECK_THROWS_AS(jeffreys_category(0.0), std::domain_error);
  CHECK_THROWS_AS(jeffreys_category(-1.0), std::domain_error);
  CHECK_THROWS_AS(jeffreys_category(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(jeffreys_category(INFINITY), std::domain_error);
}

TEST_CASE("jeffreys scale is monotone") {
  double prev = -1.0;
  for (double v : {0.1, 0.9, 1.0, 1.1, 3.0, 3.2, 9.0, 10.5, 31.0, 32.0, 99.0, 101.0, 1e6}) {
    const double cur = static_cast<int>(jeffreys_category(v));
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("calibrate matches the 2 sqrt(p) special case") {
  CHECK(calibrate(0.01, 0.5) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(calibrate(1.0, 0.3) == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
  CHECK(calibrate(0.05, 0.5) == doctest::Approx(2.0 * std::sqrt(0.05)).epsilon(1e-12));
  CHECK(calibrate(0.05, 0.5) == doctest::Approx(0.4472135955).epsilon(1e-9));
  CHECK_THROWS_AS(calibrate(0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(calibrate(1.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(calibrate(0.5, 0.0), std::domain_error);
  CHECK_THROWS_AS(calibrate(0.5, 1.0), std::domain_error);
}

// Oracle: minimize p^(1-kappa)/kappa over a fine kappa grid.
static double grid_min_calibrator(double p) {
  double best = INFINITY;
  for (int i = 1; i < 100000; ++i) {
    const double kappa = i / 100000.0;
    best = std::min(best, std::pow(p, 1.0 - kappa) / kappa);
  }
  return best;
}

TEST_CASE("vovk-sellke bound equals the grid-minimized calibrator") {
  CHECK(vovk_sellke_bound(std::exp(-2.0)) == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-12));
  CHECK(vovk_sellke_bound(0.05) == doctest::Approx(grid_min_calibrator(0.05)).epsilon(1e-6));
  CHECK(vovk_sellke_bound(0.05) == doctest::Approx(0.4072).epsilon(1e-3));
  CHECK(vovk_sellke_bound(0.01) == doctest::Approx(grid_min_calibrator(0.01)).epsilon(1e-6));
  CHECK(vovk_sellke_bound(0.01) == doctest::Approx(0.1252).epsilon(1e-3));
  CHECK_THROWS_AS(vovk_sellke_bound(0.5), std::domain_error);
  CHECK_THROWS_AS(vovk_sellke_bound(std::exp(-1.0)), std::domain_error);
}

TEST_CASE("vovk-sellke bound minorizes every calibrator on a grid") {
  for (int i = 1; i <= 30; ++i) {
    const double p = i * 0.012;  // stays below 1/e ~ 0.3679
    const double bound = vovk_sellke_bound(p);
    double tightest = INFINITY;
    for (int j = 1; j < 1000; ++j) {
      const double kappa = j / 1000.0;
      const double cal = calibrate(p, kappa);
      CHECK(bound <= cal + 1e-12);
      tightest = std::min(tightest, cal);
    }
    CHECK(tightest == doctest::Approx(bound).epsilon(1e-6));
  }
}

TEST_CASE("seeded randomness is deterministic per seed") {
  SeededRandomness a(42), b(42), c(7);
  bool all_equal = true, any_differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double ua = a.uniform();
    if (ua != b.uniform()) all_equal = false;
    if (ua != c.uniform()) any_differs = true;
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_differs);
  CHECK(a.position() == 1000);
}
