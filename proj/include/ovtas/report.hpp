// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovtas/analysis.hpp"
#include "ovtas/metrics.hpp"

namespace ovtas {

struct SolverInfo {
  bool solved = false;
  bool converged = true;
  std::size_t iterations = 0;
  double marginal_violation = 0.0;

  friend bool operator==(const SolverInfo&, const SolverInfo&) = default;
};

struct VideoReport {
  std::string id;
  std::string activity;
  std::vector<std::string> splits;
  std::size_t frames = 0;
  metrics::VideoEvaluation eval;
  SolverInfo solver;
  /// Set when the video failed and was skipped.
  std::optional<std::string> error;
};

struct SplitReport {
  std::size_t videos = 0;
  metrics::VideoMetrics metrics;
};

struct BinnedTable {
  analysis::BinDimension dimension = analysis::BinDimension::kDurationSeconds;
  std::vector<analysis::BinRow> rows;
};

struct EvalReport {
  /// Echo of the run configuration; re-running from it reproduces the report.
  nlohmann::json config = nlohmann::json::object();
  std::vector<VideoReport> videos;  ///< sorted by id
  std::map<std::string, SplitReport> splits;
  std::optional<metrics::VideoMetrics> aggregate;
  std::optional<BinnedTable> bins;

  /// False when some video failed; failures are listed in `videos`.
  bool complete() const;
};

}  // namespace ovtas
