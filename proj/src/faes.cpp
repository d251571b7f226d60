// SPDX-License-Identifier: Apache-2.0

#include "ovtas/faes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "ovtas/error.hpp"

namespace ovtas::faes {

namespace {

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

Matrix permute_cols(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, perm[c]);
  }
  return out;
}

}  // namespace

EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m) {
  Matrix out = m.values();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) {
      throw Error(ErrorCode::kDegenerateRow,
                  fmt::format("degenerate embedding row {} (norm {})", r, norm));
    }
    for (double& v : row) v /= norm;
  }
  return EmbeddingMatrix(std::move(out), /*normalized=*/true);
}

SimilarityMatrix cosine_similarity(const EmbeddingMatrix& frames,
                                   const EmbeddingMatrix& actions,
                                   bool allow_unnormalized) {
  if (frames.cols() != actions.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("embedding width mismatch: frames {} vs actions {}",
                            frames.cols(), actions.cols()));
  }
  const bool unit = frames.normalized() && actions.normalized();
  if (!unit && !allow_unnormalized) {
    throw Error(ErrorCode::kInvalidArgument,
                "cosine_similarity needs l2-normalized inputs");
  }
  Matrix s(frames.rows(), actions.rows());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto x = frames.row(t);
    for (std::size_t n = 0; n < actions.rows(); ++n) {
      const auto a = actions.row(n);
      s(t, n) = std::inner_product(x.begin(), x.end(), a.begin(), 0.0);
    }
  }
  return SimilarityMatrix(std::move(s), unit);
}

ProbMatrix softmax_rows(const SimilarityMatrix& s) {
  Matrix p = s.values();
  for (std::size_t t = 0; t < p.rows(); ++t) {
    auto row = p.row(t);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return ProbMatrix(std::move(p));
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows());
  for (std::size_t t = 0; t < m.rows(); ++t) {
    const auto row = m.row(t);
    // max_element returns the first maximum.
    out[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::ranges::copy(m.row(perm[r]), out.row(r).begin());
  }
  return out;
}

Matrix unpermute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::ranges::copy(m.row(r), out.row(perm[r]).begin());
  }
  return out;
}

PermutedEmbeddings permute_ablation(const EmbeddingMatrix& frames,
                                    const EmbeddingMatrix& actions,
                                    std::uint64_t seed, PermuteMode mode) {
  std::mt19937_64 rng(seed);
  if (mode == PermuteMode::kRows) {
    auto fp = random_permutation(frames.rows(), rng);
    auto ap = random_permutation(actions.rows(), rng);
    return {EmbeddingMatrix(permute_rows(frames.values(), fp), frames.normalized()),
            EmbeddingMatrix(permute_rows(actions.values(), ap), actions.normalized()),
            std::move(fp), std::move(ap)};
  }
  auto fp = random_permutation(frames.cols(), rng);
  auto ap = random_permutation(actions.cols(), rng);
  return {EmbeddingMatrix(permute_cols(frames.values(), fp), frames.normalized()),
          EmbeddingMatrix(permute_cols(actions.values(), ap), actions.normalized()),
          std::move(fp), std::move(ap)};
}

}  // namespace ovtas::faes
