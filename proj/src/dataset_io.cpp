// SPDX-License-Identifier: Apache-2.0

#include "ovtas/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ovtas/error.hpp"

namespace ovtas::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  out.append(buf, sizeof(T));
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EmbShape parse_header(const std::string& bytes, const fs::path& path) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic,
                fmt::format("'{}': bad magic, not an OVTE file", path.string()));
  }
  if (bytes.size() < kEmbHeaderBytes) {
    throw Error(ErrorCode::kTruncatedPayload,
                fmt::format("'{}': truncated header", path.string()));
  }
  const auto version = load_le<std::uint32_t>(bytes.data() + 4);
  if (version != kEmbVersion) {
    throw Error(ErrorCode::kBadVersion,
                fmt::format("'{}': unsupported OVTE version {}", path.string(), version));
  }
  EmbShape shape;
  shape.rows = load_le<std::uint64_t>(bytes.data() + 8);
  shape.cols = load_le<std::uint64_t>(bytes.data() + 16);
  return shape;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

[[noreturn]] void manifest_error(const std::string& msg) {
  throw Error(ErrorCode::kManifest, "manifest: " + msg);
}

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::is_regular_file(p)) {
    manifest_error(fmt::format("{} '{}' does not exist", what, p.string()));
  }
}

json metrics_to_json(const metrics::VideoMetrics& m) {
  return {{"acc", m.acc},     {"edit", m.edit},   {"f1_10", m.f1_10},
          {"f1_25", m.f1_25}, {"f1_50", m.f1_50}, {"avg", m.avg}};
}

metrics::VideoMetrics metrics_from_json(const json& j) {
  metrics::VideoMetrics m;
  m.acc = j.at("acc").get<double>();
  m.edit = j.at("edit").get<double>();
  m.f1_10 = j.at("f1_10").get<double>();
  m.f1_25 = j.at("f1_25").get<double>();
  m.f1_50 = j.at("f1_50").get<double>();
  m.avg = j.at("avg").get<double>();
  return m;
}

json counts_to_json(const metrics::VideoCounts& c) {
  return {{"correct_frames", c.correct_frames},
          {"scored_frames", c.scored_frames},
          {"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn}};
}

metrics::VideoCounts counts_from_json(const json& j) {
  metrics::VideoCounts c;
  c.correct_frames = j.at("correct_frames").get<std::size_t>();
  c.scored_frames = j.at("scored_frames").get<std::size_t>();
  c.tp = j.at("tp").get<std::array<std::size_t, 3>>();
  c.fp = j.at("fp").get<std::array<std::size_t, 3>>();
  c.fn = j.at("fn").get<std::array<std::size_t, 3>>();
  return c;
}

}  // namespace

EmbeddingMatrix read_emb(const fs::path& path) {
  const std::string bytes = slurp(path);
  const EmbShape shape = parse_header(bytes, path);
  if (shape.cols != 0 && shape.rows > std::numeric_limits<std::size_t>::max() / 4 / shape.cols) {
    throw Error(ErrorCode::kTruncatedPayload,
                fmt::format("'{}': header shape {}x{} overflows", path.string(),
                            shape.rows, shape.cols));
  }
  const std::size_t count = shape.rows * shape.cols;
  const std::size_t payload = bytes.size() - kEmbHeaderBytes;
  if (payload < count * 4) {
    throw Error(ErrorCode::kTruncatedPayload,
                fmt::format("'{}': truncated payload ({} bytes for {}x{} floats)",
                            path.string(), payload, shape.rows, shape.cols));
  }
  if (payload > count * 4) {
    throw Error(ErrorCode::kTruncatedPayload,
                fmt::format("'{}': payload length mismatch ({} trailing bytes)",
                            path.string(), payload - count * 4));
  }
  std::vector<double> data(count);
  const char* p = bytes.data() + kEmbHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) {
    const float v = load_le<float>(p + 4 * i);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite,
                  fmt::format("'{}': non-finite value at row {}, col {}", path.string(),
                              i / shape.cols, i % shape.cols));
    }
    data[i] = v;
  }
  return EmbeddingMatrix(Matrix(shape.rows, shape.cols, std::move(data)));
}

EmbShape read_emb_shape(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::string header(kEmbHeaderBytes, '\0');
  in.read(header.data(), static_cast<std::streamsize>(kEmbHeaderBytes));
  header.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(header, path);
}

void write_emb(const EmbeddingMatrix& m, const fs::path& path) {
  std::string out;
  out.reserve(kEmbHeaderBytes + 4 * m.rows() * m.cols());
  out.append(kEmbMagic, 4);
  store_le<std::uint32_t>(out, kEmbVersion);
  store_le<std::uint64_t>(out, m.rows());
  store_le<std::uint64_t>(out, m.cols());
  for (double v : m.values().data()) store_le<float>(out, static_cast<float>(v));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  }
}

FrameLabeling read_gt(const fs::path& path, const std::vector<std::string>& action_list) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < action_list.size(); ++i) {
    index.emplace(action_list[i], static_cast<int>(i));
  }
  const std::string text = slurp(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string::npos ? text.size() : nl;
    lines.push_back(trim(std::string_view(text).substr(pos, end - pos)));
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) {
    throw Error(ErrorCode::kEmptySequence,
                fmt::format("'{}': empty ground-truth file", path.string()));
  }
  std::vector<int> labels(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto it = index.find(lines[i]);
    if (it == index.end()) {
      throw Error(ErrorCode::kUnknownLabel,
                  fmt::format("'{}' line {}: unknown label '{}'", path.string(),
                              i + 1, lines[i]));
    }
    labels[i] = it->second;
  }
  return FrameLabeling(std::move(labels), action_list);
}

void write_gt(const FrameLabeling& labels, const fs::path& path) {
  if (labels.label_names().size() != labels.num_classes()) {
    throw Error(ErrorCode::kInvalidArgument, "write_gt needs label names");
  }
  std::string out;
  for (int l : labels.labels()) {
    out += labels.label_names()[static_cast<std::size_t>(l)];
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  }
}

std::size_t align_lengths(std::size_t emb_frames, std::size_t gt_frames,
                          LengthPolicy policy, std::size_t max_delta) {
  if (emb_frames == 0 || gt_frames == 0) {
    throw Error(ErrorCode::kLengthMismatch, "zero-length video");
  }
  if (emb_frames == gt_frames) return gt_frames;
  const std::size_t delta =
      emb_frames > gt_frames ? emb_frames - gt_frames : gt_frames - emb_frames;
  if (policy == LengthPolicy::kStrict || delta > max_delta) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("embeddings have {} frames, ground truth {}", emb_frames,
                            gt_frames));
  }
  spdlog::warn("frame count mismatch ({} embeddings vs {} labels), truncating",
               emb_frames, gt_frames);
  return std::min(emb_frames, gt_frames);
}

const VideoEntry& Manifest::video(const std::string& id) const {
  for (const auto& v : videos) {
    if (v.id == id) return v;
  }
  throw Error(ErrorCode::kManifest, fmt::format("manifest: unknown video '{}'", id));
}

const ActivityEntry& Manifest::activity(const std::string& name) const {
  const auto it = activities.find(name);
  if (it == activities.end()) {
    throw Error(ErrorCode::kManifest, fmt::format("manifest: unknown activity '{}'", name));
  }
  return it->second;
}

Manifest parse_manifest(const json& doc, const fs::path& base_dir,
                        const ManifestOptions& opts) {
  Manifest m;
  try {
    m.dataset = doc.value("dataset", std::string{});
    for (const auto& [name, a] : doc.at("activities").items()) {
      ActivityEntry entry;
      entry.actions = a.at("actions").get<std::vector<std::string>>();
      if (entry.actions.empty()) {
        manifest_error(fmt::format("activity '{}' has no actions", name));
      }
      std::set<std::string> seen;
      for (const auto& label : entry.actions) {
        if (!seen.insert(label).second) {
          manifest_error(fmt::format("activity '{}' lists '{}' twice", name, label));
        }
      }
      if (a.contains("action_embeddings")) {
        entry.action_embeddings =
            resolve(base_dir, a.at("action_embeddings").get<std::string>());
      }
      if (opts.require_embeddings) {
        if (!entry.action_embeddings) {
          manifest_error(fmt::format("activity '{}' has no action_embeddings", name));
        }
        require_file(*entry.action_embeddings, "action embedding file");
        const EmbShape shape = read_emb_shape(*entry.action_embeddings);
        if (shape.rows != entry.actions.size()) {
          manifest_error(fmt::format(
              "activity '{}': {} actions but {} action embedding rows", name,
              entry.actions.size(), shape.rows));
        }
      }
      m.activities.emplace(name, std::move(entry));
    }

    std::set<std::string> ids;
    for (const auto& v : doc.at("videos")) {
      VideoEntry e;
      e.id = v.at("id").get<std::string>();
      if (!ids.insert(e.id).second) {
        manifest_error(fmt::format("duplicate video id '{}'", e.id));
      }
      e.activity = v.at("activity").get<std::string>();
      if (!m.activities.contains(e.activity)) {
        manifest_error(fmt::format("video '{}' uses unknown activity '{}'", e.id, e.activity));
      }
      if (!v.contains("fps") || !v.at("fps").is_number() || !(v.at("fps").get<double>() > 0.0)) {
        manifest_error(fmt::format("video '{}' needs a positive fps", e.id));
      }
      e.fps = v.at("fps").get<double>();
      e.ground_truth = resolve(base_dir, v.at("ground_truth").get<std::string>());
      require_file(e.ground_truth, "ground truth");
      if (v.contains("frame_embeddings")) {
        e.frame_embeddings = resolve(base_dir, v.at("frame_embeddings").get<std::string>());
      }
      if (opts.require_embeddings) {
        if (!e.frame_embeddings) {
          manifest_error(fmt::format("video '{}' has no frame_embeddings", e.id));
        }
        require_file(*e.frame_embeddings, "frame embedding file");
      }
      if (v.contains("action_set")) {
        e.action_set = v.at("action_set").get<std::vector<std::string>>();
        const auto& actions = m.activities.at(e.activity).actions;
        std::set<std::string> seen;
        for (const auto& label : e.action_set) {
          if (std::find(actions.begin(), actions.end(), label) == actions.end()) {
            manifest_error(fmt::format("video '{}': action_set label '{}' not in activity",
                                       e.id, label));
          }
          if (!seen.insert(label).second) {
            manifest_error(fmt::format("video '{}': action_set repeats '{}'", e.id, label));
          }
        }
        if (e.action_set.empty()) {
          manifest_error(fmt::format("video '{}': empty action_set", e.id));
        }
      }
      m.videos.push_back(std::move(e));
    }

    if (doc.contains("splits")) {
      for (const auto& [name, list] : doc.at("splits").items()) {
        auto members = list.get<std::vector<std::string>>();
        for (const auto& id : members) {
          if (!ids.contains(id)) {
            manifest_error(fmt::format("split '{}' references unknown video '{}'", name, id));
          }
        }
        m.splits.emplace(name, std::move(members));
      }
    } else {
      m.splits.emplace("all", std::vector<std::string>(ids.begin(), ids.end()));
    }
  } catch (const json::exception& e) {
    manifest_error(e.what());
  }
  return m;
}

Manifest load_manifest(const fs::path& path, const ManifestOptions& opts) {
  json doc;
  try {
    doc = json::parse(slurp(path));
  } catch (const json::exception& e) {
    manifest_error(fmt::format("'{}': {}", path.string(), e.what()));
  }
  Manifest m = parse_manifest(doc, path.parent_path(), opts);
  m.source = path;
  return m;
}

json report_to_json(const EvalReport& report) {
  json doc;
  doc["format"] = "ovtas-results/1";
  doc["config"] = report.config;
  doc["complete"] = report.complete();

  json videos = json::array();
  for (const auto& v : report.videos) {
    json jv;
    jv["id"] = v.id;
    jv["activity"] = v.activity;
    jv["splits"] = v.splits;
    jv["frames"] = v.frames;
    if (v.error) {
      jv["error"] = *v.error;
    } else {
      jv["metrics"] = metrics_to_json(v.eval.metrics);
      jv["counts"] = counts_to_json(v.eval.counts);
      jv["solver"] = {{"solved", v.solver.solved},
                      {"converged", v.solver.converged},
                      {"iterations", v.solver.iterations},
                      {"marginal_violation", v.solver.marginal_violation}};
    }
    videos.push_back(std::move(jv));
  }
  doc["videos"] = std::move(videos);

  json splits = json::object();
  for (const auto& [name, s] : report.splits) {
    splits[name] = {{"videos", s.videos}, {"metrics", metrics_to_json(s.metrics)}};
  }
  doc["splits"] = std::move(splits);

  if (report.aggregate) doc["aggregate"] = metrics_to_json(*report.aggregate);

  if (report.bins) {
    json rows = json::array();
    for (const auto& r : report.bins->rows) {
      json jr;
      jr["lower"] = r.lower;
      jr["upper"] = r.upper ? json(*r.upper) : json(nullptr);
      jr["videos"] = r.videos;
      if (r.metrics) jr["metrics"] = metrics_to_json(*r.metrics);
      rows.push_back(std::move(jr));
    }
    doc["bins"] = {{"dimension", std::string(analysis::to_string(report.bins->dimension))},
                   {"rows", std::move(rows)}};
  }
  return doc;
}

EvalReport report_from_json(const json& doc) {
  EvalReport r;
  r.config = doc.at("config");
  for (const auto& jv : doc.at("videos")) {
    VideoReport v;
    v.id = jv.at("id").get<std::string>();
    v.activity = jv.at("activity").get<std::string>();
    v.splits = jv.at("splits").get<std::vector<std::string>>();
    v.frames = jv.at("frames").get<std::size_t>();
    if (jv.contains("error")) {
      v.error = jv.at("error").get<std::string>();
    } else {
      v.eval.metrics = metrics_from_json(jv.at("metrics"));
      v.eval.counts = counts_from_json(jv.at("counts"));
      const auto& s = jv.at("solver");
      v.solver.solved = s.at("solved").get<bool>();
      v.solver.converged = s.at("converged").get<bool>();
      v.solver.iterations = s.at("iterations").get<std::size_t>();
      v.solver.marginal_violation = s.at("marginal_violation").get<double>();
    }
    r.videos.push_back(std::move(v));
  }
  for (const auto& [name, js] : doc.at("splits").items()) {
    r.splits[name] = {js.at("videos").get<std::size_t>(), metrics_from_json(js.at("metrics"))};
  }
  if (doc.contains("aggregate")) r.aggregate = metrics_from_json(doc.at("aggregate"));
  if (doc.contains("bins")) {
    BinnedTable t;
    t.dimension = analysis::parse_bin_dimension(doc.at("bins").at("dimension").get<std::string>());
    for (const auto& jr : doc.at("bins").at("rows")) {
      analysis::BinRow row;
      row.lower = jr.at("lower").get<double>();
      if (!jr.at("upper").is_null()) row.upper = jr.at("upper").get<double>();
      row.videos = jr.at("videos").get<std::size_t>();
      if (jr.contains("metrics")) row.metrics = metrics_from_json(jr.at("metrics"));
      t.rows.push_back(row);
    }
    r.bins = std::move(t);
  }
  return r;
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

void write_results(const EvalReport& report, const fs::path& path) {
  const std::string text = dump_json(report_to_json(report));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write results to '{}'", path.string()));
  }
}

EvalReport read_results(const fs::path& path) {
  try {
    return report_from_json(json::parse(slurp(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, fmt::format("'{}': {}", path.string(), e.what()));
  }
}

}  // namespace ovtas::io
