// Conformal transducer: observation stream + tie-break randomness -> p-values.
#pragma once

#include "conformal/core.hpp"
#include "conformal/nonconformity.hpp"

#include <memory>
#include <vector>

namespace conformal {

// p = (|{i: a_i > a_n}| + theta * |{i: a_i = a_n}|) / n, i over 1..n.
// +inf == +inf counts as a tie.
inline double conformal_pvalue(const ScoreVector& scores, double theta) {
  const std::size_t n = scores.size();
  if (n == 0) throw std::domain_error("conformal_pvalue: empty score vector");
  const double an = scores[n - 1];
  std::size_t greater = 0, equal = 0;
  for (double a : scores) {
    if (a > an)
      ++greater;
    else if (a == an)
      ++equal;
  }
  return (static_cast<double>(greater) + theta * static_cast<double>(equal)) /
         static_cast<double>(n);
}

// Streaming scorer: push one observation, read the scores of the current bag.
class StreamScorer {
 public:
  virtual ~StreamScorer() = default;
  virtual void push(const Observation& z) = 0;
  virtual const ScoreVector& scores() const = 0;
};

// Rescoring adapter around any bag->scores function. O(full bag) per step.
class RescoringScorer final : public StreamScorer {
 public:
  using BagScorer = std::function<ScoreVector(const std::vector<Observation>&)>;

  explicit RescoringScorer(BagScorer f) : score_bag_(std::move(f)) {}

  void push(const Observation& z) override {
    bag_.push_back(z);
    scores_ = score_bag_(bag_);
  }

  const ScoreVector& scores() const override { return scores_; }

 private:
  BagScorer score_bag_;
  std::vector<Observation> bag_;
  ScoreVector scores_;
};

// alpha_i = z_i(0): scalar identity scorer, O(1) per step.
class IdentityScorer final : public StreamScorer {
 public:
  void push(const Observation& z) override { scores_.push_back(z.features(0)); }
  const ScoreVector& scores() const override { return scores_; }

 private:
  ScoreVector scores_;
};

// Incremental 1-NN scorer: maintains each point's nearest same-label and
// other-label distances, so step n costs O(n * dim) instead of O(n^2 * dim).
// Produces scores identical to knn_ratio_score / knn_diff_score on the bag.
// Requires a symmetric distance.
class IncrementalKnnScorer final : public StreamScorer {
 public:
  enum class Kind { ratio, diff };

  explicit IncrementalKnnScorer(Kind kind,
                                DistanceFunction d = euclidean_distance)
      : kind_(kind), d_(std::move(d)) {}

  void push(const Observation& z) override {
    const std::size_t n = bag_.size();
    detail::NearestPair mine;
    for (std::size_t i = 0; i < n; ++i) {
      const double dij = d_(bag_[i].features, z.features);
      const bool same = bag_[i].label == z.label;
      auto& theirs = nn_[i];
      if (same) {
        mine.same = std::min(mine.same, dij);
        theirs.same = std::min(theirs.same, dij);
      } else {
        mine.diff = std::min(mine.diff, dij);
        theirs.diff = std::min(theirs.diff, dij);
      }
    }
    bag_.push_back(z);
    nn_.push_back(mine);
    scores_.resize(bag_.size());
    for (std::size_t i = 0; i < bag_.size(); ++i)
      scores_[i] = kind_ == Kind::ratio ? detail::ratio_score(nn_[i])
                                        : detail::diff_score(nn_[i]);
  }

  const ScoreVector& scores() const override { return scores_; }

 private:
  Kind kind_;
  DistanceFunction d_;
  std::vector<Observation> bag_;
  std::vector<detail::NearestPair> nn_;
  ScoreVector scores_;
};

// Online state turning observations into p-values, one per step.
// Single owner, strictly sequential.
class ConformalTransducer {
 public:
  ConformalTransducer(std::unique_ptr<StreamScorer> scorer, std::uint64_t seed)
      : scorer_(std::move(scorer)), rng_(seed) {}

  double step(const Observation& z) {
    scorer_->push(z);
    const double theta = rng_.uniform();
    ++n_;
    return conformal_pvalue(scorer_->scores(), theta);
  }

  std::size_t steps() const { return n_; }

 private:
  std::unique_ptr<StreamScorer> scorer_;
  SeededRandomness rng_;
  std::size_t n_ = 0;
};

}  // namespace conformal
