// SPDX-License-Identifier: Apache-2.0
//
// Stage 2: temporal segmentation of a similarity matrix with balanced
// entropic optimal transport.
//
//   min_{P in U(u, v)}  <P, (1 - S) + rho * R>  -  eps * H(P)
//   u = 1/T, v = 1/N,  R[i][j] = |i/T - j/N|
//
// solved with log-domain Sinkhorn and decoded by a per-frame argmax.

#pragma once

#include <cstddef>
#include <cstdint>

#include "ovtas/types.hpp"

namespace ovtas::smts {

struct HyperParams {
  double epsilon = 0.07;
  double rho = 0.04;
  std::size_t max_iters = 1000;
  double tol = 1e-6;

  /// Throws kInvalidArgument unless epsilon > 0, rho >= 0, max_iters >= 1, tol > 0.
  void validate() const;
};

/// Marginal violations are checked once every this many iterations.
inline constexpr std::size_t kCheckEvery = 10;

/// R[i][j] = |i/T - j/N| with zero-based indices.
Matrix temporal_prior(std::size_t frames, std::size_t actions);

/// cost = (1 - S) + rho * R.
Matrix build_cost(const SimilarityMatrix& s, const Matrix& prior, double rho);

/// Balanced entropic OT with uniform marginals. Never throws on
/// non-convergence: the iterate with the smallest marginal violation is
/// returned with `converged == false`.
TransportPlan sinkhorn(const Matrix& cost, const HyperParams& hp);

/// labels[t] = argmax_j plan[t][j], ties to the lowest j.
FrameLabeling decode(const TransportPlan& plan);

struct SegmentOptions {
  bool ablate_prior = false;   ///< solve with R = 0
  bool ablate_stage2 = false;  ///< skip OT, per-frame argmax of softmax(S)
};

struct SegmentResult {
  FrameLabeling labeling;
  /// False when no OT problem was solved (stage-2 ablation or N == 1).
  bool solved = false;
  bool converged = true;
  std::size_t iterations = 0;
  double marginal_violation = 0.0;
};

SegmentResult segment_video(const SimilarityMatrix& s, const HyperParams& hp,
                            const SegmentOptions& opts = {});

/// segment_video on a seeded shuffle of the action columns; labels are
/// mapped back so they index the original action order.
SegmentResult segment_video_shuffled(const SimilarityMatrix& s,
                                     const HyperParams& hp,
                                     const SegmentOptions& opts,
                                     std::uint64_t seed);

}  // namespace ovtas::smts
