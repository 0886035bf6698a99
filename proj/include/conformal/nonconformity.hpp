// Equivariant nonconformity measures: bag of observations -> strangeness scores.
#pragma once

#include "conformal/core.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

namespace conformal {

// Extended reals; +/-inf are legal sentinel scores.
using ScoreVector = std::vector<double>;

using DistanceFunction = std::function<double(const Vector&, const Vector&)>;

inline double euclidean_distance(const Vector& a, const Vector& b) {
  return (a - b).norm();
}

// (x,y) -> (d(x,y)+d(y,x))/2, for distances that are not symmetric.
inline DistanceFunction symmetrize_distance(DistanceFunction d) {
  return [d = std::move(d)](const Vector& x, const Vector& y) {
    return 0.5 * (d(x, y) + d(y, x));
  };
}

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest same-label and different-label distances for each bag member.
struct NearestPair {
  double same = kInf;
  double diff = kInf;
};

inline std::vector<NearestPair> nearest_pairs(const std::vector<Observation>& bag,
                                              const DistanceFunction& d) {
  const std::size_t n = bag.size();
  std::vector<NearestPair> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // d is assumed symmetric; wrap asymmetric distances in
      // symmetrize_distance before use.
      const double dij = d(bag[i].features, bag[j].features);
      const bool same = bag[i].label == bag[j].label;
      if (same) {
        nn[i].same = std::min(nn[i].same, dij);
        nn[j].same = std::min(nn[j].same, dij);
      } else {
        nn[i].diff = std::min(nn[i].diff, dij);
        nn[j].diff = std::min(nn[j].diff, dij);
      }
    }
  }
  return nn;
}

// Sentinel conventions for the 1-NN ratio: empty same-label minimum -> +inf;
// all labels equal -> 0; zero/zero -> 1 (neutral); x/0 -> +inf.
inline double ratio_score(const NearestPair& nn) {
  if (nn.same == kInf) return kInf;
  if (nn.diff == kInf) return 0.0;
  if (nn.diff == 0.0) return nn.same == 0.0 ? 1.0 : kInf;
  return nn.same / nn.diff;
}

inline double diff_score(const NearestPair& nn) {
  if (nn.same == kInf) return kInf;
  if (nn.diff == kInf) return -kInf;
  return nn.same - nn.diff;
}

}  // namespace detail

// 1-NN ratio score: nearest same-label distance over nearest other-label
// distance. Every observation must carry a label.
inline ScoreVector knn_ratio_score(const std::vector<Observation>& bag,
                                   const DistanceFunction& d = euclidean_distance) {
  const auto nn = detail::nearest_pairs(bag, d);
  ScoreVector alpha(bag.size());
  for (std::size_t i = 0; i < bag.size(); ++i) alpha[i] = detail::ratio_score(nn[i]);
  return alpha;
}

// Same as knn_ratio_score with the ratio replaced by a difference.
inline ScoreVector knn_diff_score(const std::vector<Observation>& bag,
                                  const DistanceFunction& d = euclidean_distance) {
  const auto nn = detail::nearest_pairs(bag, d);
  ScoreVector alpha(bag.size());
  for (std::size_t i = 0; i < bag.size(); ++i) alpha[i] = detail::diff_score(nn[i]);
  return alpha;
}

// alpha_i = 1 if z_i >= median of the remaining n-1 values, else 0.
// Median of an even multiset = mean of the two central order statistics.
inline ScoreVector median_ncm(const std::vector<double>& zs) {
  const std::size_t n = zs.size();
  if (n < 2) throw std::domain_error("median_ncm: need at least two values");
  ScoreVector alpha(n);
  std::vector<double> rest;
  rest.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    rest.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) rest.push_back(zs[j]);
    std::sort(rest.begin(), rest.end());
    const std::size_t m = rest.size();
    const double med =
        (m % 2 == 1) ? rest[m / 2] : 0.5 * (rest[m / 2 - 1] + rest[m / 2]);
    alpha[i] = zs[i] >= med ? 1.0 : 0.0;
  }
  return alpha;
}

// alpha_i = z_i for scalar observations.
inline ScoreVector identity_ncm(const std::vector<double>& zs) { return zs; }

}  // namespace conformal
