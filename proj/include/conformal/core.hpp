// Shared domain types: observations, evidence scale, calibrators, seeded RNG.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

namespace conformal {

using Vector = Eigen::VectorXd;

// One streamed data point: a feature vector plus an optional categorical label.
struct Observation {
  Vector features;
  std::optional<int> label;

  Observation() = default;
  explicit Observation(Vector x, std::optional<int> y = std::nullopt)
      : features(std::move(x)), label(y) {}

  // Convenience for scalar streams.
  static Observation scalar(double z, std::optional<int> y = std::nullopt) {
    Vector x(1);
    x(0) = z;
    return Observation(std::move(x), y);
  }
};

// Jeffreys's rule-of-thumb scale for the final martingale value.
enum class EvidenceCategory {
  supports_null,
  bare_mention,
  substantial,
  strong,
  very_strong,
  decisive,
};

// Thresholds 1, sqrt(10), 10, 10^1.5, 100; a value exactly at a threshold
// falls into the lower category (left-open intervals).
inline EvidenceCategory jeffreys_category(double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::domain_error("jeffreys_category: value must be positive and finite");
  if (value <= 1.0) return EvidenceCategory::supports_null;
  if (value <= std::sqrt(10.0)) return EvidenceCategory::bare_mention;
  if (value <= 10.0) return EvidenceCategory::substantial;
  if (value <= std::pow(10.0, 1.5)) return EvidenceCategory::strong;
  if (value <= 100.0) return EvidenceCategory::very_strong;
  return EvidenceCategory::decisive;
}

inline const char* to_string(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::supports_null: return "supports_null";
    case EvidenceCategory::bare_mention: return "bare_mention";
    case EvidenceCategory::substantial: return "substantial";
    case EvidenceCategory::strong: return "strong";
    case EvidenceCategory::very_strong: return "very_strong";
    case EvidenceCategory::decisive: return "decisive";
  }
  return "?";
}

// Calibrator p -> p^(1-kappa)/kappa turning a p-value into a Bayes factor.
inline double calibrate(double p, double kappa) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("calibrate: p must be in (0,1]");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::domain_error("calibrate: kappa must be in (0,1)");
  return std::pow(p, 1.0 - kappa) / kappa;
}

// min over kappa in (0,1) of p^(1-kappa)/kappa, valid for p < 1/e where the
// minimizing kappa = -1/log(p) lies inside (0,1).
inline double vovk_sellke_bound(double p) {
  if (!(p > 0.0 && p < std::exp(-1.0)))
    throw std::domain_error(
        "vovk_sellke_bound: p must be in (0,1/e); at p >= 1/e the minimum "
        "is attained at the boundary kappa = 1");
  return -std::exp(1.0) * p * std::log(p);
}

// Deterministic uniform-[0,1) stream. Same seed, same implementation:
// identical draws. Single owner per stream.
class SeededRandomness {
 public:
  explicit SeededRandomness(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    ++position_;
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  std::uint64_t position() const { return position_; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t position_ = 0;
};

}  // namespace conformal
