// SPDX-License-Identifier: Apache-2.0
//
// End-to-end evaluation runs over a manifest: per-video loading, the
// chosen segmenter, metrics, per-split aggregates and binned tables.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ovtas/analysis.hpp"
#include "ovtas/dataset_io.hpp"
#include "ovtas/faes.hpp"
#include "ovtas/metrics.hpp"
#include "ovtas/report.hpp"
#include "ovtas/smts.hpp"

namespace ovtas {

enum class Method {
  kOvtas,
  kStage2Ablation,
  kRandomUniform,
  kEsMean,
  kEsVote,
  kEsNrp,
};

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct RunConfig {
  std::filesystem::path manifest;
  /// Empty selects every split in the manifest.
  std::vector<std::string> splits;
  Method method = Method::kOvtas;
  smts::HyperParams hp;
  /// Equal-splits bin count; nullopt means the video's action count.
  std::optional<std::size_t> k_bins;
  double lambda = 0.05;
  std::uint64_t seed = 0;

  bool ablate_prior = false;
  bool ablate_l2 = false;
  bool ablate_stage1 = false;
  faes::PermuteMode stage1_mode = faes::PermuteMode::kRows;

  std::optional<std::string> ignore_background;
  metrics::Matching f1_matching = metrics::Matching::kOptimal;
  metrics::Pooling pooling = metrics::Pooling::kPerVideo;
  io::LengthPolicy length_policy = io::LengthPolicy::kTruncate;

  std::optional<analysis::BinDimension> bins;
  /// Overrides the dataset preset when non-empty.
  std::vector<double> bin_edges;

  bool skip_failures = false;

  // Reported alongside the other optimal transport settings but not used by
  // the balanced objective.
  double alpha = 0.5;
  double lambda_frames = 0.11;
  double lambda_actions = 0.01;

  // Execution-only settings; not echoed because they never change results.
  std::size_t jobs = 0;  ///< 0 = hardware concurrency
  std::optional<std::filesystem::path> save_predictions;

  /// Throws kInvalidArgument on incompatible method / flag combinations.
  void validate() const;

  nlohmann::json to_json() const;
  /// Accepts either a bare config object or a full results document.
  static RunConfig from_json(const nlohmann::json& doc);
};

/// Throws on the first failing video unless `skip_failures` is set, in which
/// case failures are recorded and excluded from every aggregate.
EvalReport run_eval(const RunConfig& config);

struct DatasetStats {
  analysis::Summary video_duration_s;
  analysis::Summary segments_per_video;
  analysis::Summary segment_duration_s;
};

/// Ground-truth statistics over the selected splits (all when empty).
/// Needs only annotations and fps. Throws kNoVideos on an empty selection.
DatasetStats run_stats(const io::Manifest& manifest,
                       const std::vector<std::string>& splits = {});

nlohmann::json stats_to_json(const DatasetStats& stats);

/// Seed for one video, independent of processing order.
std::uint64_t video_seed(std::uint64_t run_seed, std::string_view video_id,
                         std::uint64_t stream);

}  // namespace ovtas
