// SPDX-License-Identifier: Apache-2.0
//
// File formats: OVTE embedding files, per-frame ground-truth text, the JSON
// dataset manifest, and the JSON results document.
//
// OVTE layout (all little-endian):
//   bytes 0..3    magic "OVTE"
//   bytes 4..7    uint32 version (= 1)
//   bytes 8..15   uint64 rows
//   bytes 16..23  uint64 cols
//   then rows * cols float32 values, row-major

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovtas/report.hpp"
#include "ovtas/types.hpp"

namespace ovtas::io {

inline constexpr char kEmbMagic[4] = {'O', 'V', 'T', 'E'};
inline constexpr std::uint32_t kEmbVersion = 1;
inline constexpr std::size_t kEmbHeaderBytes = 24;

struct EmbShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Distinct ErrorCodes for bad magic, bad version, truncated payload and
/// non-finite payload.
EmbeddingMatrix read_emb(const std::filesystem::path& path);
/// Header only.
EmbShape read_emb_shape(const std::filesystem::path& path);
/// Values are narrowed to float32.
void write_emb(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// One label per line; LF or CRLF; trailing blank lines ignored.
FrameLabeling read_gt(const std::filesystem::path& path,
                      const std::vector<std::string>& action_list);
void write_gt(const FrameLabeling& labels, const std::filesystem::path& path);

enum class LengthPolicy {
  kStrict,    ///< any mismatch is an error
  kTruncate,  ///< use the shorter length when |delta| <= max_delta
};

inline constexpr std::size_t kMaxLengthDelta = 2;

std::size_t align_lengths(std::size_t emb_frames, std::size_t gt_frames,
                          LengthPolicy policy = LengthPolicy::kTruncate,
                          std::size_t max_delta = kMaxLengthDelta);

struct ActivityEntry {
  std::vector<std::string> actions;
  std::optional<std::filesystem::path> action_embeddings;
};

struct VideoEntry {
  std::string id;
  std::string activity;
  double fps = 0.0;
  std::optional<std::filesystem::path> frame_embeddings;
  std::filesystem::path ground_truth;
  /// Optional subset of the activity's actions known to occur in the video.
  std::vector<std::string> action_set;
};

struct Manifest {
  std::filesystem::path source;
  std::string dataset;
  std::map<std::string, ActivityEntry> activities;
  std::vector<VideoEntry> videos;
  std::map<std::string, std::vector<std::string>> splits;

  const VideoEntry& video(const std::string& id) const;
  const ActivityEntry& activity(const std::string& name) const;
};

struct ManifestOptions {
  /// Require and check frame / action embedding files (off for stats runs).
  bool require_embeddings = true;
};

/// Parses and validates a manifest; relative paths resolve against the
/// manifest's directory. All failures raise kManifest.
Manifest load_manifest(const std::filesystem::path& path,
                       const ManifestOptions& opts = {});
Manifest parse_manifest(const nlohmann::json& doc,
                        const std::filesystem::path& base_dir,
                        const ManifestOptions& opts = {});

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

/// Deterministic, key-sorted, two-space indented JSON with trailing newline.
std::string dump_json(const nlohmann::json& doc);

void write_results(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_results(const std::filesystem::path& path);

}  // namespace ovtas::io
