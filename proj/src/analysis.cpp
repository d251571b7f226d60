// SPDX-License-Identifier: Apache-2.0

#include "ovtas/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "ovtas/error.hpp"

namespace ovtas::analysis {

namespace {

class Accumulator {
 public:
  void add(double x) {
    s_.min = s_.count == 0 ? x : std::min(s_.min, x);
    s_.max = s_.count == 0 ? x : std::max(s_.max, x);
    sum_ += x;
    ++s_.count;
  }
  Summary finish() const {
    if (s_.count == 0) throw Error(ErrorCode::kNoVideos, "no videos");
    Summary out = s_;
    out.mean = sum_ / static_cast<double>(s_.count);
    return out;
  }

 private:
  Summary s_;
  double sum_ = 0.0;
};

double checked_fps(const AnnotatedVideo& v) {
  if (!(v.fps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("video '{}' has no valid fps", v.id));
  }
  return v.fps;
}

std::string canonical_dataset(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

Summary video_duration_stats(std::span<const AnnotatedVideo> videos) {
  Accumulator acc;
  for (const auto& v : videos) {
    acc.add(static_cast<double>(v.gt.size()) / checked_fps(v));
  }
  return acc.finish();
}

Summary segment_count_stats(std::span<const AnnotatedVideo> videos) {
  Accumulator acc;
  for (const auto& v : videos) {
    acc.add(static_cast<double>(segments_of(v.gt).size()));
  }
  return acc.finish();
}

Summary segment_duration_stats(std::span<const AnnotatedVideo> videos) {
  Accumulator acc;
  for (const auto& v : videos) {
    const double fps = checked_fps(v);
    for (const auto& s : segments_of(v.gt)) {
      acc.add(static_cast<double>(s.length()) / fps);
    }
  }
  return acc.finish();
}

std::string_view to_string(BinDimension d) {
  return d == BinDimension::kDurationSeconds ? "duration" : "segcount";
}

BinDimension parse_bin_dimension(std::string_view s) {
  if (s == "duration") return BinDimension::kDurationSeconds;
  if (s == "segcount") return BinDimension::kSegmentCount;
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("unknown bin dimension '{}' (duration|segcount)", s));
}

void BinSpec::validate() const {
  if (edges.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "bin spec needs at least one edge");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "bin edges must be strictly ascending");
    }
  }
}

std::optional<BinSpec> preset_bins(std::string_view dataset, BinDimension d) {
  const std::string name = canonical_dataset(dataset);
  if (d == BinDimension::kDurationSeconds) {
    if (name == "breakfast" || name == "gtea") return BinSpec{d, {0, 60, 120}};
    if (name == "50salads") return BinSpec{d, {240, 360, 480}};
  } else {
    if (name == "gtea") return BinSpec{d, {20, 30, 40}};
    if (name == "breakfast") return BinSpec{d, {0, 5, 10, 15}};
    if (name == "50salads") return BinSpec{d, {15, 20, 25}};
  }
  return std::nullopt;
}

std::vector<BinRow> binned_metrics(std::span<const BinnedVideo> videos,
                                   const BinSpec& spec, metrics::Pooling pooling) {
  spec.validate();
  const std::size_t nbins = spec.edges.size();
  // bin -> split -> evaluations; std::map keeps split order stable.
  std::vector<std::map<std::string, std::vector<metrics::VideoEvaluation>>> grouped(nbins);
  std::vector<std::size_t> counts(nbins, 0);

  for (const auto& v : videos) {
    if (v.attribute < spec.edges.front()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("video '{}' ({} = {}) matches no bin", v.id,
                              to_string(spec.dimension), v.attribute));
    }
    const auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), v.attribute);
    const auto bin = static_cast<std::size_t>(it - spec.edges.begin()) - 1;
    grouped[bin][v.split].push_back(v.eval);
    ++counts[bin];
  }

  std::vector<BinRow> rows(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    rows[b].lower = spec.edges[b];
    if (b + 1 < nbins) rows[b].upper = spec.edges[b + 1];
    rows[b].videos = counts[b];
    if (counts[b] == 0) continue;
    std::vector<std::vector<metrics::VideoEvaluation>> splits;
    for (auto& [name, evals] : grouped[b]) splits.push_back(std::move(evals));
    rows[b].metrics = metrics::aggregate(splits, pooling);
  }
  return rows;
}

}  // namespace ovtas::analysis
