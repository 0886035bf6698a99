// Conformal CUSUM and Shiryaev-Roberts multistage alarm procedures.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace conformal {

enum class DetectorProcedure { cusum, sr };

// Runs one of the two multistage procedures over a positive martingale,
// consuming capital ratios S_n / S_{n-1} so the caller may track capital in
// log space. CUSUM statistic W_n = max(W_{n-1}, 1) * r_n with W reset to 0
// after an alarm (equals max_{i=tau..n-1} S_n/S_i); SR statistic
// R_n = r_n * (R_{n-1} + 1) with R reset to 0 (equals the analogous sum).
// Alarm when the statistic reaches the threshold c.
class Detector {
 public:
  Detector(DetectorProcedure procedure, double threshold)
      : procedure_(procedure), threshold_(threshold) {
    if (!(threshold > 1.0))
      throw std::domain_error("Detector: threshold must exceed 1");
  }

  // Feed the ratio S_n / S_{n-1}; returns true when the n-th step alarms.
  bool step(double ratio) {
    if (!(ratio > 0.0) || !std::isfinite(ratio))
      throw std::domain_error("Detector: martingale ratio must be positive and finite");
    ++n_;
    if (procedure_ == DetectorProcedure::cusum)
      statistic_ = std::max(statistic_, 1.0) * ratio;
    else
      statistic_ = ratio * (statistic_ + 1.0);
    if (statistic_ >= threshold_) {
      alarms_.push_back(n_);
      statistic_ = 0.0;
      return true;
    }
    return false;
  }

  double statistic() const { return statistic_; }
  std::size_t steps() const { return n_; }
  const std::vector<std::size_t>& alarms() const { return alarms_; }

 private:
  DetectorProcedure procedure_;
  double threshold_;
  double statistic_ = 0.0;
  std::size_t n_ = 0;
  std::vector<std::size_t> alarms_;
};

// A_n / n: alarms raised at or before step n, relative to n.
inline double alarm_frequency(const std::vector<std::size_t>& alarms, std::size_t n) {
  if (n < 1) throw std::domain_error("alarm_frequency: n must be >= 1");
  std::size_t count = 0;
  for (std::size_t tau : alarms)
    if (tau <= n) ++count;
  return static_cast<double>(count) / static_cast<double>(n);
}

}  // namespace conformal
