// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "ovtas/dataset_io.hpp"

using namespace ovtas;
using testutil::error_code;
using testutil::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Hand-built little-endian OVTE image.
std::string ovte(std::uint32_t version, std::uint64_t rows, std::uint64_t cols,
                 const std::vector<float>& values) {
  std::string out = "OVTE";
  auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(b[i]));
  };
  put(&version, 4);
  put(&rows, 8);
  put(&cols, 8);
  for (float v : values) put(&v, 4);
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST(Emb, ReadsHandBuiltFile) {
  TempDir dir("emb");
  write_bytes(dir.path() / "a.ovte", ovte(1, 1, 1, {1.0f}));
  const auto m = io::read_emb(dir.path() / "a.ovte");
  EXPECT_EQ(m.values(), Matrix(1, 1, 1.0));
  const auto shape = io::read_emb_shape(dir.path() / "a.ovte");
  EXPECT_EQ(shape.rows, 1u);
  EXPECT_EQ(shape.cols, 1u);
}

TEST(Emb, DistinctErrors) {
  TempDir dir("emb");
  const auto p = dir.path() / "x.ovte";
  auto code_for = [&](const std::string& bytes) {
    write_bytes(p, bytes);
    return error_code([&] { io::read_emb(p); });
  };
  std::string bad_magic = ovte(1, 1, 1, {1.0f});
  bad_magic[0] = 'X';
  EXPECT_EQ(code_for(bad_magic), ErrorCode::kBadMagic);
  EXPECT_EQ(code_for(ovte(2, 1, 1, {1.0f})), ErrorCode::kBadVersion);
  EXPECT_EQ(code_for(ovte(1, 2, 2, {1.0f, 2.0f, 3.0f})), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(code_for(ovte(1, 1, 1, {1.0f, 2.0f})), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(code_for(ovte(1, 1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()})),
            ErrorCode::kNonFinite);
  EXPECT_EQ(code_for("OVTE\x01"), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(error_code([&] { io::read_emb(dir.path() / "missing.ovte"); }), ErrorCode::kIo);
}

TEST(Emb, PropertyRoundTripBitExact) {
  TempDir dir("emb");
  std::mt19937_64 rng(1);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng() % 40;
    const std::size_t cols = 1 + rng() % 24;
    std::vector<double> data(rows * cols);
    for (double& v : data) v = normal(rng);  // float-representable
    const EmbeddingMatrix m(Matrix(rows, cols, data));
    const auto p = dir.path() / "rt.ovte";
    io::write_emb(m, p);
    EXPECT_EQ(fs::file_size(p), io::kEmbHeaderBytes + 4 * rows * cols);
    EXPECT_EQ(io::read_emb(p).values(), m.values());
    const std::string first = read_bytes(p);
    io::write_emb(io::read_emb(p), p);
    EXPECT_EQ(read_bytes(p), first);
  }
}

TEST(Gt, ReadsLabelsAndToleratesLineEndings) {
  TempDir dir("gt");
  const std::vector<std::string> actions = {"pour_milk", "stir"};
  write_text(dir.path() / "a.txt", "pour_milk\npour_milk\nstir\n\n\n");
  EXPECT_EQ(io::read_gt(dir.path() / "a.txt", actions).labels(), (std::vector<int>{0, 0, 1}));
  write_text(dir.path() / "b.txt", "stir\r\npour_milk\r\n");
  EXPECT_EQ(io::read_gt(dir.path() / "b.txt", actions).labels(), (std::vector<int>{1, 0}));
}

TEST(Gt, UnknownLabelNamesTheLine) {
  TempDir dir("gt");
  write_text(dir.path() / "a.txt", "stir\nwhisk\n");
  try {
    io::read_gt(dir.path() / "a.txt", {"stir"});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownLabel);
    EXPECT_NE(std::string(e.what()).find("whisk"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  write_text(dir.path() / "empty.txt", "\n\n");
  EXPECT_EQ(error_code([&] { io::read_gt(dir.path() / "empty.txt", {"stir"}); }),
            ErrorCode::kEmptySequence);
}

TEST(Gt, WriteReadRoundTrip) {
  TempDir dir("gt");
  const std::vector<std::string> names = {"a", "b", "c"};
  const FrameLabeling l({2, 2, 0, 1, 1, 1}, names);
  io::write_gt(l, dir.path() / "x.txt");
  EXPECT_EQ(io::read_gt(dir.path() / "x.txt", names).labels(), l.labels());
}

TEST(AlignLengths, Policy) {
  EXPECT_EQ(io::align_lengths(1000, 1000), 1000u);
  EXPECT_EQ(io::align_lengths(1001, 1000), 1000u);
  EXPECT_EQ(io::align_lengths(998, 1000), 998u);
  EXPECT_EQ(error_code([] { io::align_lengths(1000, 900); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(error_code([] { io::align_lengths(1001, 1000, io::LengthPolicy::kStrict); }),
            ErrorCode::kLengthMismatch);
  EXPECT_EQ(error_code([] { io::align_lengths(0, 0); }), ErrorCode::kLengthMismatch);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    io::write_emb(EmbeddingMatrix(Matrix(2, 3, 1.0)), dir_.path() / "acts.ovte");
    io::write_emb(EmbeddingMatrix(Matrix(4, 3, 1.0)), dir_.path() / "v1.ovte");
    write_text(dir_.path() / "v1.txt", "a\na\nb\nb\n");
    doc_ = {{"dataset", "demo"},
            {"activities", {{"cook", {{"actions", {"a", "b"}}, {"action_embeddings", "acts.ovte"}}}}},
            {"videos",
             {{{"id", "v1"},
               {"activity", "cook"},
               {"fps", 15},
               {"frame_embeddings", "v1.ovte"},
               {"ground_truth", "v1.txt"}}}},
            {"splits", {{"s1", {"v1"}}}}};
  }

  std::optional<ErrorCode> parse_code(const json& doc, io::ManifestOptions opts = {}) {
    return error_code([&] { io::parse_manifest(doc, dir_.path(), opts); });
  }

  TempDir dir_{"manifest"};
  json doc_;
};

TEST_F(ManifestTest, ParsesAndResolvesPaths) {
  write_text(dir_.path() / "m.json", doc_.dump());
  const auto m = io::load_manifest(dir_.path() / "m.json");
  EXPECT_EQ(m.dataset, "demo");
  EXPECT_EQ(m.video("v1").fps, 15.0);
  EXPECT_EQ(*m.video("v1").frame_embeddings, dir_.path() / "v1.ovte");
  EXPECT_EQ(m.splits.at("s1"), std::vector<std::string>{"v1"});
  EXPECT_EQ(m.activity("cook").actions.size(), 2u);
  EXPECT_EQ(error_code([&] { m.video("nope"); }), ErrorCode::kManifest);
}

TEST_F(ManifestTest, DefaultSplitIsAllVideos) {
  doc_.erase("splits");
  const auto m = io::parse_manifest(doc_, dir_.path());
  EXPECT_EQ(m.splits.at("all"), std::vector<std::string>{"v1"});
}

TEST_F(ManifestTest, Errors) {
  auto broken = [&](auto mutate) {
    json d = doc_;
    mutate(d);
    return parse_code(d);
  };
  EXPECT_EQ(broken([](json& d) { d["videos"][0].erase("fps"); }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["videos"][0]["fps"] = 0; }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["videos"][0]["activity"] = "bake"; }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["videos"][0]["ground_truth"] = "none.txt"; }),
            ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["videos"].push_back(d["videos"][0]); }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["splits"]["s2"] = {"ghost"}; }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["activities"]["cook"]["actions"] = {"a", "a"}; }),
            ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["activities"]["cook"]["actions"] = {"a", "b", "c"}; }),
            ErrorCode::kManifest);  // 3 actions, 2 embedding rows
  EXPECT_EQ(broken([](json& d) { d["videos"][0]["action_set"] = {"z"}; }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d.erase("videos"); }), ErrorCode::kManifest);
  EXPECT_EQ(broken([](json& d) { d["videos"][0].erase("frame_embeddings"); }),
            ErrorCode::kManifest);

  json no_emb = doc_;
  no_emb["videos"][0].erase("frame_embeddings");
  no_emb["activities"]["cook"].erase("action_embeddings");
  EXPECT_EQ(parse_code(no_emb, {.require_embeddings = false}), std::nullopt);

  write_text(dir_.path() / "bad.json", "{not json");
  EXPECT_EQ(error_code([&] { io::load_manifest(dir_.path() / "bad.json"); }), ErrorCode::kManifest);
}

namespace {

metrics::VideoEvaluation sample_eval(double x) {
  metrics::VideoEvaluation e;
  e.metrics = {x, x / 3.0, x / 7.0, 0.1 + x, 1.0 / 3.0, 0};
  e.metrics.update_avg();
  e.counts.correct_frames = 7;
  e.counts.scored_frames = 9;
  e.counts.tp = {3, 2, 1};
  e.counts.fp = {1, 2, 3};
  e.counts.fn = {0, 1, 2};
  return e;
}

}  // namespace

TEST(Results, EmptyReportIsValid) {
  EvalReport r;
  const json j = io::report_to_json(r);
  EXPECT_EQ(j.at("videos").size(), 0u);
  EXPECT_FALSE(j.contains("aggregate"));
  EXPECT_TRUE(j.at("complete").get<bool>());
  const EvalReport back = io::report_from_json(j);
  EXPECT_TRUE(back.videos.empty());
  EXPECT_FALSE(back.aggregate.has_value());
}

TEST(Results, RoundTripFullPrecision) {
  EvalReport r;
  r.config = {{"method", "ovtas"}, {"epsilon", 0.07}};
  VideoReport v;
  v.id = "v1";
  v.activity = "cook";
  v.splits = {"s1", "s2"};
  v.frames = 123;
  v.eval = sample_eval(41.123456789012345);
  v.solver = {true, false, 1000, 3.3e-5};
  r.videos.push_back(v);
  VideoReport failed;
  failed.id = "v2";
  failed.activity = "cook";
  failed.splits = {"s1"};
  failed.error = "boom";
  r.videos.push_back(failed);
  r.splits["s1"] = {1, v.eval.metrics};
  r.aggregate = v.eval.metrics;
  analysis::BinRow row{0.0, 60.0, 1, v.eval.metrics};
  analysis::BinRow open{60.0, std::nullopt, 0, std::nullopt};
  r.bins = BinnedTable{analysis::BinDimension::kDurationSeconds, {row, open}};

  TempDir dir("results");
  const auto path = dir.path() / "r.json";
  io::write_results(r, path);
  const EvalReport back = io::read_results(path);
  EXPECT_FALSE(back.complete());
  ASSERT_EQ(back.videos.size(), 2u);
  EXPECT_EQ(back.videos[0].eval.metrics, v.eval.metrics);
  EXPECT_EQ(back.videos[0].eval.counts.tp, v.eval.counts.tp);
  EXPECT_EQ(back.videos[0].solver, v.solver);
  EXPECT_EQ(back.videos[0].splits, v.splits);
  EXPECT_EQ(back.videos[1].error, "boom");
  EXPECT_EQ(*back.aggregate, *r.aggregate);
  EXPECT_EQ(back.splits.at("s1").metrics, v.eval.metrics);
  ASSERT_TRUE(back.bins.has_value());
  EXPECT_EQ(back.bins->rows[0].metrics, row.metrics);
  EXPECT_FALSE(back.bins->rows[1].upper.has_value());
  EXPECT_FALSE(back.bins->rows[1].metrics.has_value());
  EXPECT_EQ(back.config, r.config);

  // Serialization is a fixed point.
  const auto again = dir.path() / "again.json";
  io::write_results(back, again);
  EXPECT_EQ(read_bytes(again), read_bytes(path));
}

TEST(Results, DumpIsSortedAndNewlineTerminated) {
  const std::string s = io::dump_json({{"b", 1}, {"a", 2}});
  EXPECT_EQ(s, "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
}
