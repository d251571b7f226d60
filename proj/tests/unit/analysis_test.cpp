// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ovtas/analysis.hpp"

using namespace ovtas;
using namespace ovtas::analysis;
using testutil::error_code;

namespace {

AnnotatedVideo video(std::string id, double fps, std::vector<int> labels) {
  return {std::move(id), fps, FrameLabeling(std::move(labels), 4)};
}

BinnedVideo binned(std::string id, double attribute, double acc, std::string split = "s1") {
  BinnedVideo v{std::move(id), std::move(split), attribute, {}};
  v.eval.metrics = {acc, acc, acc, acc, acc, 0};
  v.eval.metrics.update_avg();
  return v;
}

}  // namespace

TEST(DurationStats, Examples) {
  const std::vector<AnnotatedVideo> one = {video("a", 15, std::vector<int>(150, 0))};
  const Summary s = video_duration_stats(one);
  EXPECT_DOUBLE_EQ(s.min, 10.0);
  EXPECT_DOUBLE_EQ(s.max, 10.0);
  EXPECT_DOUBLE_EQ(s.mean, 10.0);

  const std::vector<AnnotatedVideo> two = {video("a", 10, std::vector<int>(100, 0)),
                                           video("b", 10, std::vector<int>(200, 1))};
  EXPECT_DOUBLE_EQ(video_duration_stats(two).mean, 15.0);
}

TEST(DurationStats, Errors) {
  EXPECT_EQ(error_code([] { video_duration_stats({}); }), ErrorCode::kNoVideos);
  const std::vector<AnnotatedVideo> no_fps = {video("a", 0, {0})};
  EXPECT_EQ(error_code([&] { video_duration_stats(no_fps); }), ErrorCode::kInvalidArgument);
}

TEST(SegmentCountStats, Examples) {
  const std::vector<AnnotatedVideo> constant = {video("a", 1, std::vector<int>(9, 2))};
  EXPECT_DOUBLE_EQ(segment_count_stats(constant).mean, 1.0);
  const std::vector<AnnotatedVideo> alternating = {video("a", 1, {0, 1, 0, 1, 0, 1})};
  EXPECT_DOUBLE_EQ(segment_count_stats(alternating).mean, 6.0);
}

TEST(SegmentDurationStats, Examples) {
  const std::vector<AnnotatedVideo> one = {video("a", 10, std::vector<int>(10, 0))};
  EXPECT_DOUBLE_EQ(segment_duration_stats(one).mean, 1.0);
  // Segments of 1 s and 3 s at 10 fps.
  std::vector<int> labels(10, 0);
  labels.insert(labels.end(), 30, 1);
  const std::vector<AnnotatedVideo> two = {video("a", 10, labels)};
  const Summary s = segment_duration_stats(two);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.max, 3.0);
  EXPECT_EQ(s.count, 2u);
}

// Pooled segment durations sum to the total annotated duration.
TEST(SegmentDurationStats, PropertyDurationsAddUp) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<AnnotatedVideo> videos;
    double total = 0.0;
    for (int v = 0; v < 4; ++v) {
      const std::size_t t = 20 + rng() % 200;
      videos.push_back(video("v" + std::to_string(v), 15, oracle::random_runs(rng, t, 4, 25)));
      total += static_cast<double>(t) / 15.0;
    }
    const Summary s = segment_duration_stats(videos);
    EXPECT_NEAR(s.mean * static_cast<double>(s.count), total, 1e-9);
    EXPECT_EQ(s.count, static_cast<std::size_t>(segment_count_stats(videos).mean * 4 + 0.5));
  }
}

TEST(BinSpec, ParsingAndValidation) {
  EXPECT_EQ(parse_bin_dimension("duration"), BinDimension::kDurationSeconds);
  EXPECT_EQ(parse_bin_dimension("segcount"), BinDimension::kSegmentCount);
  EXPECT_EQ(error_code([] { parse_bin_dimension("length"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code([] { BinSpec{BinDimension::kSegmentCount, {}}.validate(); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code([] { BinSpec{BinDimension::kSegmentCount, {1, 1}}.validate(); }),
            ErrorCode::kInvalidArgument);
}

TEST(BinSpec, Presets) {
  EXPECT_EQ(preset_bins("GTEA", BinDimension::kDurationSeconds)->edges,
            (std::vector<double>{0, 60, 120}));
  EXPECT_EQ(preset_bins("50 Salads", BinDimension::kSegmentCount)->edges,
            (std::vector<double>{15, 20, 25}));
  EXPECT_EQ(preset_bins("breakfast", BinDimension::kSegmentCount)->edges,
            (std::vector<double>{0, 5, 10, 15}));
  EXPECT_FALSE(preset_bins("toy", BinDimension::kDurationSeconds).has_value());
}

TEST(BinnedMetrics, Examples) {
  const BinSpec spec{BinDimension::kDurationSeconds, {0, 60, 120}};
  const std::vector<BinnedVideo> videos = {binned("a", 50, 10), binned("b", 130, 30)};
  const auto rows = binned_metrics(videos, spec);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].videos, 1u);
  EXPECT_DOUBLE_EQ(rows[0].metrics->acc, 10.0);
  EXPECT_EQ(rows[1].videos, 0u);
  EXPECT_FALSE(rows[1].metrics.has_value());
  EXPECT_DOUBLE_EQ(rows[2].metrics->acc, 30.0);
  EXPECT_EQ(rows[1].upper, 120.0);
  EXPECT_FALSE(rows[2].upper.has_value());
}

TEST(BinnedMetrics, SingleBinEqualsGlobalAggregate) {
  const BinSpec spec{BinDimension::kSegmentCount, {0}};
  const std::vector<BinnedVideo> videos = {binned("a", 3, 10, "s1"), binned("b", 7, 50, "s1"),
                                           binned("c", 2, 90, "s2")};
  const auto rows = binned_metrics(videos, spec);
  ASSERT_EQ(rows.size(), 1u);
  std::vector<metrics::VideoEvaluation> s1 = {videos[0].eval, videos[1].eval};
  std::vector<metrics::VideoEvaluation> s2 = {videos[2].eval};
  EXPECT_EQ(*rows[0].metrics, metrics::aggregate({s1, s2}));
}

TEST(BinnedMetrics, AttributeBelowFirstEdgeNamesVideo) {
  const BinSpec spec{BinDimension::kSegmentCount, {20, 30, 40}};
  const std::vector<BinnedVideo> videos = {binned("short_one", 12, 0)};
  try {
    binned_metrics(videos, spec);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("short_one"), std::string::npos);
  }
}
