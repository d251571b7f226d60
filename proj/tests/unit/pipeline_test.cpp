// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "ovtas/pipeline.hpp"
#include "ovtas/toy.hpp"

using namespace ovtas;
using testutil::error_code;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

toy::ToyConfig small_toy() {
  toy::ToyConfig cfg;
  cfg.videos_per_activity = 3;
  cfg.min_frames = 60;
  cfg.max_frames = 120;
  return cfg;
}

RunConfig config_for(const fs::path& manifest, Method m = Method::kOvtas) {
  RunConfig c;
  c.manifest = manifest;
  c.method = m;
  c.seed = 11;
  c.jobs = 1;
  return c;
}

}  // namespace

TEST(Pipeline, EveryMethodRunsOnToyData) {
  TempDir dir("pipe");
  const auto manifest = toy::write_toy_dataset(dir.path(), small_toy());
  for (Method m : {Method::kOvtas, Method::kStage2Ablation, Method::kRandomUniform,
                   Method::kEsMean, Method::kEsVote, Method::kEsNrp}) {
    const EvalReport r = run_eval(config_for(manifest, m));
    EXPECT_TRUE(r.complete()) << to_string(m);
    EXPECT_EQ(r.videos.size(), 6u);
    ASSERT_TRUE(r.aggregate.has_value());
    EXPECT_EQ(r.splits.size(), 2u);
    for (const auto& v : r.videos) {
      EXPECT_GE(v.eval.metrics.acc, 0.0);
      EXPECT_LE(v.eval.metrics.acc, 100.0);
    }
  }
}

TEST(Pipeline, FullMethodBeatsItsAblations) {
  TempDir dir("pipe");
  const auto manifest = toy::write_toy_dataset(dir.path(), small_toy());
  const double full = run_eval(config_for(manifest)).aggregate->avg;
  RunConfig no_prior = config_for(manifest);
  no_prior.ablate_prior = true;
  EXPECT_LE(run_eval(no_prior).aggregate->avg, full);
  EXPECT_GT(full, run_eval(config_for(manifest, Method::kStage2Ablation)).aggregate->avg);
  EXPECT_GT(full, run_eval(config_for(manifest, Method::kRandomUniform)).aggregate->avg);
}

TEST(Pipeline, DeterministicAcrossJobsAndConfigEcho) {
  TempDir dir("pipe");
  const auto manifest = toy::write_toy_dataset(dir.path(), small_toy());
  RunConfig c = config_for(manifest);
  c.ablate_stage1 = true;
  const std::string first = io::dump_json(io::report_to_json(run_eval(c)));
  EXPECT_EQ(io::dump_json(io::report_to_json(run_eval(c))), first);
  c.jobs = 3;
  const EvalReport threaded = run_eval(c);
  EXPECT_EQ(io::dump_json(io::report_to_json(threaded)), first);

  RunConfig echoed = RunConfig::from_json(threaded.config);
  echoed.jobs = 2;
  EXPECT_EQ(io::dump_json(io::report_to_json(run_eval(echoed))), first);
}

TEST(Pipeline, ConfigJsonRoundTrip) {
  RunConfig c;
  c.manifest = "m.json";
  c.splits = {"s1"};
  c.method = Method::kEsNrp;
  c.k_bins = 7;
  c.lambda = 0.2;
  c.seed = 99;
  c.stage1_mode = faes::PermuteMode::kFeatures;
  c.ignore_background = "SIL";
  c.f1_matching = metrics::Matching::kGreedy;
  c.pooling = metrics::Pooling::kPooled;
  c.length_policy = io::LengthPolicy::kStrict;
  c.bins = analysis::BinDimension::kSegmentCount;
  c.bin_edges = {0, 5};
  EXPECT_EQ(RunConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_EQ(c.to_json().at("reserved").at("alpha"), 0.5);
}

TEST(Pipeline, FailuresAreFatalUnlessSkipped) {
  TempDir dir("pipe");
  const auto manifest = toy::write_toy_dataset(dir.path(), small_toy());
  std::ofstream(dir.path() / "features" / "activity0_video01.ovte", std::ios::binary) << "junk";

  EXPECT_TRUE(error_code([&] { run_eval(config_for(manifest)); }).has_value());

  RunConfig c = config_for(manifest);
  c.skip_failures = true;
  const EvalReport r = run_eval(c);
  EXPECT_FALSE(r.complete());
  ASSERT_EQ(r.videos.size(), 6u);
  std::size_t failed = 0;
  for (const auto& v : r.videos) {
    if (v.error) {
      ++failed;
      EXPECT_EQ(v.id, "activity0_video01");
    }
  }
  EXPECT_EQ(failed, 1u);
  // The failed video sits in split2 only, which keeps one video.
  EXPECT_EQ(r.splits.at("split2").videos, 1u);
  EXPECT_EQ(r.splits.at("split1").videos, 4u);
}

TEST(Pipeline, ValidateRejectsConflicts) {
  RunConfig c;
  c.method = Method::kEsMean;
  c.ablate_prior = true;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = {};
  c.method = Method::kRandomUniform;
  c.ablate_l2 = true;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = {};
  c.lambda = -1;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = {};
  c.k_bins = 0;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = {};
  c.hp.epsilon = 0;
  EXPECT_EQ(error_code([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = {};
  c.method = Method::kEsVote;
  c.ablate_stage1 = true;
  EXPECT_EQ(error_code([&] { c.validate(); }), std::nullopt);
}

TEST(Pipeline, BinsNeedEdgesWithoutPreset) {
  TempDir dir("pipe");
  const auto manifest = toy::write_toy_dataset(dir.path(), small_toy());
  RunConfig c = config_for(manifest, Method::kEsMean);
  c.bins = analysis::BinDimension::kDurationSeconds;
  EXPECT_EQ(error_code([&] { run_eval(c); }), ErrorCode::kInvalidArgument);
  c.bin_edges = {0, 6};
  const EvalReport r = run_eval(c);
  ASSERT_TRUE(r.bins.has_value());
  ASSERT_EQ(r.bins->rows.size(), 2u);
  std::size_t counted = 0;
  for (const auto& row : r.bins->rows) counted += row.videos;
  EXPECT_EQ(counted, 6u);  // each video is in exactly one split
}

TEST(Stats, HandComputedTwoVideos) {
  TempDir dir("stats");
  std::ofstream(dir.path() / "a.txt") << "x\nx\nx\ny\ny\ny\n";  // 6 frames, 2 segments
  std::ofstream(dir.path() / "b.txt") << "y\ny\ny\ny\n";        // 4 frames, 1 segment
  const nlohmann::json doc = {
      {"dataset", "hand"},
      {"activities", {{"act", {{"actions", {"x", "y"}}}}}},
      {"videos",
       {{{"id", "a"}, {"activity", "act"}, {"fps", 2}, {"ground_truth", "a.txt"}},
        {{"id", "b"}, {"activity", "act"}, {"fps", 2}, {"ground_truth", "b.txt"}}}},
      {"splits", {{"one", {"a"}}, {"both", {"a", "b"}}}}};
  const auto m = io::parse_manifest(doc, dir.path(), {.require_embeddings = false});
  const DatasetStats s = run_stats(m, {"both"});
  EXPECT_DOUBLE_EQ(s.video_duration_s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.video_duration_s.min, 2.0);
  EXPECT_DOUBLE_EQ(s.video_duration_s.max, 3.0);
  EXPECT_DOUBLE_EQ(s.segments_per_video.mean, 1.5);
  EXPECT_DOUBLE_EQ(s.segment_duration_s.mean, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(run_stats(m, {"one"}).video_duration_s.mean, 3.0);
  EXPECT_EQ(stats_to_json(s).at("segments_per_video").at("mean"), 1.5);

  nlohmann::json empty = doc;
  empty["splits"]["none"] = nlohmann::json::array();
  const auto m2 = io::parse_manifest(empty, dir.path(), {.require_embeddings = false});
  EXPECT_EQ(error_code([&] { run_stats(m2, {"none"}); }), ErrorCode::kNoVideos);
}

TEST(VideoSeed, StableAndDistinct) {
  EXPECT_EQ(video_seed(1, "a", 0), video_seed(1, "a", 0));
  EXPECT_NE(video_seed(1, "a", 0), video_seed(1, "b", 0));
  EXPECT_NE(video_seed(1, "a", 0), video_seed(1, "a", 1));
  EXPECT_NE(video_seed(1, "a", 0), video_seed(2, "a", 0));
}
