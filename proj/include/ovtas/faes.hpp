// SPDX-License-Identifier: Apache-2.0
//
// Stage 1: frame/action embedding similarity.

#pragma once

#include <cstdint>
#include <vector>

#include "ovtas/types.hpp"

namespace ovtas::faes {

/// Scales every row to unit l2 norm. Rows with norm below 1e-12 raise
/// kDegenerateRow rather than being zeroed.
EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m);

/// S = X A^T. Both inputs must be normalized unless `allow_unnormalized`
/// is set (the l2 ablation).
SimilarityMatrix cosine_similarity(const EmbeddingMatrix& frames,
                                   const EmbeddingMatrix& actions,
                                   bool allow_unnormalized = false);

/// Row-wise softmax over actions, max-subtracted.
ProbMatrix softmax_rows(const SimilarityMatrix& s);

/// Row-argmax of S with ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

enum class PermuteMode {
  kRows,      ///< shuffle whole embeddings (frame order, action order)
  kFeatures,  ///< shuffle embedding dimensions, independently per matrix
};

struct PermutedEmbeddings {
  EmbeddingMatrix frames;
  EmbeddingMatrix actions;
  /// out.row(i) == in.row(perm[i]) for kRows; columns likewise for kFeatures.
  std::vector<std::size_t> frame_perm;
  std::vector<std::size_t> action_perm;
};

/// Stage-1 ablation: destroys the frame/action correspondence with two
/// independent seeded permutations.
PermutedEmbeddings permute_ablation(const EmbeddingMatrix& frames,
                                    const EmbeddingMatrix& actions,
                                    std::uint64_t seed,
                                    PermuteMode mode = PermuteMode::kRows);

/// out.row(i) = in.row(perm[i]).
Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm);
/// out.row(perm[i]) = in.row(i); undoes permute_rows.
Matrix unpermute_rows(const Matrix& m, const std::vector<std::size_t>& perm);

}  // namespace ovtas::faes
