// Betting functions and betting martingales over p-values.
#pragma once

#include "conformal/core.hpp"
#include "conformal/pvalues.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace conformal {

// A betting function is a density on [0,1]: nonnegative, integrates to 1.
using BettingFunction = std::function<double(double)>;

// f(u) = kappa * u^(kappa-1), kappa in (0,1). Integrates to 1 exactly
// (antiderivative u^kappa).
inline BettingFunction power_betting_function(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::domain_error("power_betting_function: kappa must be in (0,1)");
  return [kappa](double u) { return kappa * std::pow(u, kappa - 1.0); };
}

// Capital S_n of a betting martingale, tracked in log space so USPS-scale
// magnitudes (1e18 and beyond) survive. capital() may round to +inf.
struct MartingaleState {
  std::size_t step = 0;
  double log_capital = 0.0;  // natural log; -inf means capital exactly 0

  double capital() const { return std::exp(log_capital); }
  double log10_capital() const { return log_capital / std::log(10.0); }
};

// A predictable betting strategy: the bet for step n is fixed before p_n is
// seen, so consume() may use only past p-values. Single owner per stream.
class BettingStrategy {
 public:
  virtual ~BettingStrategy() = default;
  virtual std::unique_ptr<BettingStrategy> clone() const = 0;

  // Consume the next p-value; returns the capital ratio S_n / S_{n-1}.
  // Zero capital is absorbing.
  double step(double p) {
    if (state_.log_capital == -std::numeric_limits<double>::infinity()) {
      ++state_.step;
      return 0.0;
    }
    const double ratio = consume(p);
    if (std::isnan(ratio)) throw std::runtime_error("betting strategy produced NaN");
    state_.log_capital += std::log(ratio);
    ++state_.step;
    return ratio;
  }

  const MartingaleState& state() const { return state_; }

 protected:
  virtual double consume(double p) = 0;

 private:
  MartingaleState state_;
};

// Product of a fixed power betting function: S_n = prod kappa p_i^(kappa-1).
class PowerStrategy final : public BettingStrategy {
 public:
  explicit PowerStrategy(double kappa) : kappa_(kappa) {
    if (!(kappa > 0.0 && kappa < 1.0))
      throw std::domain_error("PowerStrategy: kappa must be in (0,1)");
  }

  std::unique_ptr<BettingStrategy> clone() const override {
    return std::make_unique<PowerStrategy>(*this);
  }

 protected:
  double consume(double p) override {
    return kappa_ * std::pow(p, kappa_ - 1.0);
  }

 private:
  double kappa_;
};

// Simple mixture int_0^1 S^(kappa) dkappa, midpoint rule with m nodes
// kappa_j = (j - 1/2)/m. Per-node capitals kept in log space; the mixture
// value is recovered with log-sum-exp.
class MixtureStrategy final : public BettingStrategy {
 public:
  explicit MixtureStrategy(int nodes = 100) {
    if (nodes < 2) throw std::domain_error("MixtureStrategy: need at least 2 nodes");
    log_weights_.assign(static_cast<std::size_t>(nodes), 0.0);
  }

  std::unique_ptr<BettingStrategy> clone() const override {
    return std::make_unique<MixtureStrategy>(*this);
  }

 protected:
  double consume(double p) override {
    const double before = log_mixture();
    const std::size_t m = log_weights_.size();
    const double logp = std::log(p);
    for (std::size_t j = 0; j < m; ++j) {
      const double kappa = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
      log_weights_[j] += std::log(kappa) + (kappa - 1.0) * logp;
    }
    return std::exp(log_mixture() - before);
  }

 private:
  double log_mixture() const {
    const double mx = *std::max_element(log_weights_.begin(), log_weights_.end());
    if (mx == -std::numeric_limits<double>::infinity()) return mx;
    double s = 0.0;
    for (double lw : log_weights_) s += std::exp(lw - mx);
    return mx + std::log(s / static_cast<double>(log_weights_.size()));
  }

  std::vector<double> log_weights_;  // log S^(kappa_j)
};

// Histogram ("Kelly") bettor: B bins each primed with C pseudo-counts;
// bets (C + n_i)/(C + n/B) on the bin containing p, then files p into its
// bin. Interior bin boundaries belong to the right bin; the last bin is
// closed on the right.
class HistogramStrategy final : public BettingStrategy {
 public:
  HistogramStrategy(int bins, double pseudo_count)
      : pseudo_count_(pseudo_count), counts_(static_cast<std::size_t>(bins), 0) {
    if (bins < 1) throw std::domain_error("HistogramStrategy: need at least 1 bin");
    if (pseudo_count < 0.0)
      throw std::domain_error("HistogramStrategy: pseudo-count must be >= 0");
  }

  // Current betting density, frozen (does not follow later updates).
  BettingFunction betting_function() const {
    return [self = *this](double u) { return self.density(u); };
  }

  double density(double u) const {
    if (!(u >= 0.0 && u <= 1.0))
      throw std::domain_error("histogram density: p must be in [0,1]");
    const std::size_t bins = counts_.size();
    const double per_bin = pseudo_count_ + static_cast<double>(seen_) /
                                               static_cast<double>(bins);
    if (per_bin == 0.0)
      throw std::domain_error("histogram density: C = 0 with no p-values seen");
    return (pseudo_count_ + static_cast<double>(counts_[bin_of(u)])) / per_bin;
  }

  void update(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::domain_error("histogram update: p must be in [0,1]");
    ++counts_[bin_of(p)];
    ++seen_;
  }

  std::unique_ptr<BettingStrategy> clone() const override {
    return std::make_unique<HistogramStrategy>(*this);
  }

 protected:
  double consume(double p) override {
    const double f = density(p);
    update(p);
    return f;
  }

 private:
  std::size_t bin_of(double u) const {
    const std::size_t bins = counts_.size();
    const auto i = static_cast<std::size_t>(u * static_cast<double>(bins));
    return std::min(i, bins - 1);
  }

  double pseudo_count_;
  std::vector<std::size_t> counts_;
  std::size_t seen_ = 0;
};

// Product martingale over an explicit sequence of betting functions; the
// n-th function is requested only after p_1..p_{n-1} have been consumed.
class ProductStrategy final : public BettingStrategy {
 public:
  using FunctionChooser = std::function<BettingFunction(const std::vector<double>& past)>;

  explicit ProductStrategy(FunctionChooser choose) : choose_(std::move(choose)) {}

  std::unique_ptr<BettingStrategy> clone() const override {
    return std::make_unique<ProductStrategy>(*this);
  }

 protected:
  double consume(double p) override {
    const double f = choose_(past_)(p);
    past_.push_back(p);
    return f;
  }

 private:
  FunctionChooser choose_;
  std::vector<double> past_;
};

// One step of a conformal martingale run.
struct StepRecord {
  std::size_t n = 0;
  double p = 0.0;
  double log10_capital = 0.0;
};

// Feed a transducer's p-values into a strategy; full per-step trajectory.
template <typename ObservationRange>
std::vector<StepRecord> conformal_martingale_run(ConformalTransducer& transducer,
                                                 BettingStrategy& strategy,
                                                 const ObservationRange& stream) {
  std::vector<StepRecord> trajectory;
  for (const Observation& z : stream) {
    const double p = transducer.step(z);
    strategy.step(p);
    trajectory.push_back({strategy.state().step, p, strategy.state().log10_capital()});
  }
  return trajectory;
}

}  // namespace conformal
