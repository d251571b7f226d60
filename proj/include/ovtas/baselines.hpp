// SPDX-License-Identifier: Apache-2.0
//
// Training-free reference segmenters: uniform random labels and the
// equal-splits family (bin mean, bin vote, and a non-repetition DP).

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ovtas/types.hpp"

namespace ovtas::baselines {

/// K contiguous bins over [0, T) with edges e_k = floor(k T / K).
struct BinPartition {
  std::vector<std::size_t> edges;  // size K + 1

  std::size_t bins() const noexcept { return edges.size() - 1; }
  std::size_t begin(std::size_t k) const { return edges[k]; }
  std::size_t end(std::size_t k) const { return edges[k + 1]; }
};

FrameLabeling random_uniform(std::size_t frames, std::size_t classes,
                             std::uint64_t seed);

/// Throws kInvalidArgument unless 1 <= K <= T.
BinPartition equal_bins(std::size_t frames, std::size_t bins);

/// K x C matrix of per-bin mean similarities.
Matrix bin_mean_scores(const SimilarityMatrix& s, const BinPartition& bins);

FrameLabeling es_mean(const SimilarityMatrix& s, std::size_t bins);
FrameLabeling es_vote(const SimilarityMatrix& s, std::size_t bins);
FrameLabeling es_nrp(const SimilarityMatrix& s, std::size_t bins, double lambda);

/// Maximizes sum_k scores[k][y_k] - lambda * #{k >= 1 : y_k == y_{k-1}}
/// in O(K C). Ties go to the lower class index.
std::vector<int> nrp_decode(const Matrix& scores, double lambda);

/// Objective value of a bin path under the non-repetition penalty.
double nrp_objective(const Matrix& scores, const std::vector<int>& path,
                     double lambda);

/// Broadcasts one label per bin to frames.
FrameLabeling expand_bins(const std::vector<int>& bin_labels,
                          const BinPartition& bins, std::size_t classes);

}  // namespace ovtas::baselines
