// SPDX-License-Identifier: Apache-2.0
//
// Frame accuracy, segmental edit score and overlap F1, all in percent.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "ovtas/types.hpp"

namespace ovtas::metrics {

inline constexpr std::array<double, 3> kF1Thresholds = {0.10, 0.25, 0.50};

/// How predicted segments are paired with ground-truth segments for F1.
enum class Matching {
  /// Maximum number of same-class pairs with IoU >= tau, each segment used
  /// at most once.
  kOptimal,
  /// Predicted segments in temporal order each claim the unclaimed
  /// same-class ground-truth segment of highest IoU (the MS-TCN script).
  kGreedy,
};

struct MetricOptions {
  /// Label whose frames and segments are dropped before scoring.
  std::optional<int> background;
  Matching matching = Matching::kOptimal;
};

struct VideoMetrics {
  double acc = 0.0;
  double edit = 0.0;
  double f1_10 = 0.0;
  double f1_25 = 0.0;
  double f1_50 = 0.0;
  double avg = 0.0;

  /// Sets avg to the mean of the other five.
  void update_avg();
  friend bool operator==(const VideoMetrics&, const VideoMetrics&) = default;
};

/// Raw counts behind one video's scores; used for pooled aggregation.
struct VideoCounts {
  std::size_t correct_frames = 0;
  std::size_t scored_frames = 0;
  std::array<std::size_t, 3> tp{};
  std::array<std::size_t, 3> fp{};
  std::array<std::size_t, 3> fn{};
};

struct F1Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// 100 * 2TP / (2TP + FP + FN); 0 when the denominator vanishes.
double f1_from_counts(const F1Counts& c);

/// Segment-level IoU of two frame intervals.
double interval_iou(const Segment& a, const Segment& b);

double frame_accuracy(const FrameLabeling& pred, const FrameLabeling& gt,
                      const MetricOptions& opts = {});

double edit_score(const FrameLabeling& pred, const FrameLabeling& gt,
                  const MetricOptions& opts = {});

F1Counts f1_counts(const FrameLabeling& pred, const FrameLabeling& gt,
                   double tau, const MetricOptions& opts = {});

double f1_at(const FrameLabeling& pred, const FrameLabeling& gt, double tau,
             const MetricOptions& opts = {});

/// Unit-cost Levenshtein distance.
std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b);

struct VideoEvaluation {
  VideoMetrics metrics;
  VideoCounts counts;
};

/// All five metrics for one video. Throws kLengthMismatch on unequal lengths.
VideoEvaluation evaluate_video(const FrameLabeling& pred, const FrameLabeling& gt,
                               const MetricOptions& opts = {});

enum class Pooling {
  kPerVideo,  ///< mean of per-video scores
  kPooled,    ///< acc and F1 from frame / segment counts summed over the split
};

/// Mean over videos within each split, then mean over splits; avg is
/// recomputed from the aggregated five. Throws kNoVideos when empty.
VideoMetrics aggregate(const std::vector<std::vector<VideoEvaluation>>& splits,
                       Pooling pooling = Pooling::kPerVideo);

/// Single-split convenience.
VideoMetrics aggregate(const std::vector<VideoEvaluation>& videos,
                       Pooling pooling = Pooling::kPerVideo);

}  // namespace ovtas::metrics
