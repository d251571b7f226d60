// SPDX-License-Identifier: Apache-2.0
//
// Synthetic datasets with known ground truth, written in the same on-disk
// layout as real benchmarks (OVTE embeddings, per-frame label files and a
// manifest). Frames of action n are drawn around that action's embedding,
// so the similarity matrix is block structured. Every embedding also
// carries a shared offset whose strength differs per action, which makes
// one action win the plain per-frame argmax almost everywhere.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace ovtas::toy {

struct ToyConfig {
  std::size_t activities = 2;
  std::size_t actions_per_activity = 5;
  std::size_t videos_per_activity = 4;
  std::size_t min_frames = 150;
  std::size_t max_frames = 300;
  std::size_t dim = 32;
  double fps = 15.0;
  /// Weight of the true action direction in a frame embedding.
  double signal = 1.0;
  /// Weight of the shared direction in frame embeddings.
  double frame_bias = 1.0;
  /// Largest per-action weight of the shared direction in action embeddings.
  double action_bias = 1.5;
  /// Per-dimension standard deviation of frame noise.
  double noise = 0.1;
  std::uint64_t seed = 7;
};

/// Writes the dataset under `dir` and returns the manifest path.
std::filesystem::path write_toy_dataset(const std::filesystem::path& dir,
                                        const ToyConfig& cfg = {});

}  // namespace ovtas::toy
