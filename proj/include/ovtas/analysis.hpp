// SPDX-License-Identifier: Apache-2.0
//
// Dataset statistics and metric breakdowns by video duration or by the
// number of ground-truth segments.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ovtas/metrics.hpp"
#include "ovtas/types.hpp"

namespace ovtas::analysis {

struct Summary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

struct AnnotatedVideo {
  std::string id;
  double fps = 0.0;
  FrameLabeling gt;
};

/// Duration T / fps in seconds, over videos. Throws kInvalidArgument on a
/// missing (non-positive) fps and kNoVideos on empty input.
Summary video_duration_stats(std::span<const AnnotatedVideo> videos);

/// Ground-truth segments per video.
Summary segment_count_stats(std::span<const AnnotatedVideo> videos);

/// Ground-truth segment lengths in seconds, pooled over all videos.
Summary segment_duration_stats(std::span<const AnnotatedVideo> videos);

enum class BinDimension { kDurationSeconds, kSegmentCount };

std::string_view to_string(BinDimension d);
/// Accepts "duration" and "segcount".
BinDimension parse_bin_dimension(std::string_view s);

/// Half-open bins [edges[i], edges[i+1]); the last bin is [edges.back(), inf).
struct BinSpec {
  BinDimension dimension = BinDimension::kDurationSeconds;
  std::vector<double> edges;

  /// Throws kInvalidArgument unless edges is non-empty and strictly ascending.
  void validate() const;
};

/// Edges used for the published duration / segment-count tables of the
/// Breakfast, GTEA and 50 Salads benchmarks; nullopt for other datasets.
std::optional<BinSpec> preset_bins(std::string_view dataset, BinDimension d);

struct BinnedVideo {
  std::string id;
  std::string split;
  double attribute = 0.0;
  metrics::VideoEvaluation eval;
};

struct BinRow {
  double lower = 0.0;
  std::optional<double> upper;  ///< nullopt for the open-ended last bin
  std::size_t videos = 0;
  std::optional<metrics::VideoMetrics> metrics;  ///< nullopt for an empty bin
};

/// Per-bin aggregate (mean within split, then across splits). A video whose
/// attribute falls below the first edge raises kInvalidArgument naming it.
std::vector<BinRow> binned_metrics(std::span<const BinnedVideo> videos,
                                   const BinSpec& spec,
                                   metrics::Pooling pooling = metrics::Pooling::kPerVideo);

}  // namespace ovtas::analysis
