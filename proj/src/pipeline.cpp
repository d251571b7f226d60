// SPDX-License-Identifier: Apache-2.0

#include "ovtas/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ovtas/baselines.hpp"
#include "ovtas/error.hpp"

namespace ovtas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kActionOrderStream = 1;
constexpr std::uint64_t kStage1Stream = 2;
constexpr std::uint64_t kRandomLabelStream = 3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename Enum>
struct Names {
  Enum value;
  std::string_view name;
};

constexpr Names<Method> kMethods[] = {
    {Method::kOvtas, "ovtas"},
    {Method::kStage2Ablation, "stage2_ablation"},
    {Method::kRandomUniform, "random_uniform"},
    {Method::kEsMean, "es_mean"},
    {Method::kEsVote, "es_vote"},
    {Method::kEsNrp, "es_nrp"},
};

template <typename Enum, std::size_t N>
Enum parse_enum(const Names<Enum> (&table)[N], std::string_view s, std::string_view what) {
  for (const auto& e : table) {
    if (e.name == s) return e.value;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown {} '{}'", what, s));
}

template <typename Enum, std::size_t N>
std::string_view enum_name(const Names<Enum> (&table)[N], Enum v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

constexpr Names<faes::PermuteMode> kPermuteModes[] = {
    {faes::PermuteMode::kRows, "rows"},
    {faes::PermuteMode::kFeatures, "features"},
};
constexpr Names<metrics::Matching> kMatchings[] = {
    {metrics::Matching::kOptimal, "optimal"},
    {metrics::Matching::kGreedy, "greedy"},
};
constexpr Names<metrics::Pooling> kPoolings[] = {
    {metrics::Pooling::kPerVideo, "video"},
    {metrics::Pooling::kPooled, "pooled"},
};
constexpr Names<io::LengthPolicy> kLengthPolicies[] = {
    {io::LengthPolicy::kTruncate, "truncate"},
    {io::LengthPolicy::kStrict, "strict"},
};

bool uses_similarity(Method m) { return m != Method::kRandomUniform; }

struct VideoOutcome {
  VideoReport report;
  std::optional<std::string> error;
};

// Immutable state shared by all workers.
struct RunContext {
  const RunConfig& config;
  const io::Manifest& manifest;
  std::map<std::string, EmbeddingMatrix> action_embeddings;
};

std::vector<std::size_t> action_columns(const io::VideoEntry& video,
                                        const io::ActivityEntry& activity) {
  std::vector<std::size_t> cols;
  if (video.action_set.empty()) {
    for (std::size_t i = 0; i < activity.actions.size(); ++i) cols.push_back(i);
    return cols;
  }
  for (const auto& label : video.action_set) {
    const auto it = std::find(activity.actions.begin(), activity.actions.end(), label);
    cols.push_back(static_cast<std::size_t>(it - activity.actions.begin()));
  }
  return cols;
}

EmbeddingMatrix first_rows(const EmbeddingMatrix& m, std::size_t rows) {
  if (rows == m.rows()) return m;
  std::vector<double> data(m.values().data().begin(),
                           m.values().data().begin() +
                               static_cast<std::ptrdiff_t>(rows * m.cols()));
  return EmbeddingMatrix(Matrix(rows, m.cols(), std::move(data)), m.normalized());
}

EmbeddingMatrix select_rows(const EmbeddingMatrix& m, const std::vector<std::size_t>& rows) {
  Matrix sub(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::ranges::copy(m.row(rows[i]), sub.row(i).begin());
  }
  return EmbeddingMatrix(std::move(sub), m.normalized());
}

VideoReport process_video(const RunContext& ctx, const io::VideoEntry& video) {
  const RunConfig& cfg = ctx.config;
  const io::ActivityEntry& activity = ctx.manifest.activity(video.activity);

  VideoReport rep;
  rep.id = video.id;
  rep.activity = video.activity;

  const FrameLabeling gt_full = io::read_gt(video.ground_truth, activity.actions);
  const EmbeddingMatrix frames_full = io::read_emb(*video.frame_embeddings);
  const std::size_t frames =
      io::align_lengths(frames_full.rows(), gt_full.size(), cfg.length_policy);
  rep.frames = frames;

  const FrameLabeling gt(
      std::vector<int>(gt_full.labels().begin(),
                       gt_full.labels().begin() + static_cast<std::ptrdiff_t>(frames)),
      activity.actions);
  const std::vector<std::size_t> cols = action_columns(video, activity);
  const std::size_t n = cols.size();

  std::vector<int> sub_labels;
  if (!uses_similarity(cfg.method)) {
    sub_labels = baselines::random_uniform(
                     frames, n, video_seed(cfg.seed, video.id, kRandomLabelStream))
                     .labels();
  } else {
    EmbeddingMatrix x = first_rows(frames_full, frames);
    EmbeddingMatrix a = select_rows(ctx.action_embeddings.at(video.activity), cols);
    if (x.cols() != a.cols()) {
      throw Error(ErrorCode::kShapeMismatch,
                  fmt::format("frame embeddings have width {}, action embeddings {}",
                              x.cols(), a.cols()));
    }
    if (cfg.ablate_stage1) {
      auto permuted = faes::permute_ablation(
          x, a, video_seed(cfg.seed, video.id, kStage1Stream), cfg.stage1_mode);
      x = std::move(permuted.frames);
      a = std::move(permuted.actions);
    }
    if (!cfg.ablate_l2) {
      x = faes::l2_normalize_rows(x);
      a = faes::l2_normalize_rows(a);
    }
    const SimilarityMatrix s = faes::cosine_similarity(x, a, cfg.ablate_l2);
    const std::size_t k = cfg.k_bins.value_or(n);

    switch (cfg.method) {
      case Method::kOvtas: {
        const auto res = smts::segment_video_shuffled(
            s, cfg.hp, {.ablate_prior = cfg.ablate_prior},
            video_seed(cfg.seed, video.id, kActionOrderStream));
        rep.solver = {res.solved, res.converged, res.iterations, res.marginal_violation};
        if (!res.converged) {
          spdlog::warn("{}: sinkhorn did not converge (violation {:.3g})", video.id,
                       res.marginal_violation);
        }
        sub_labels = res.labeling.labels();
        break;
      }
      case Method::kStage2Ablation:
        sub_labels = smts::segment_video(s, cfg.hp, {.ablate_stage2 = true}).labeling.labels();
        break;
      case Method::kEsMean:
        sub_labels = baselines::es_mean(s, k).labels();
        break;
      case Method::kEsVote:
        sub_labels = baselines::es_vote(s, k).labels();
        break;
      case Method::kEsNrp:
        sub_labels = baselines::es_nrp(s, k, cfg.lambda).labels();
        break;
      case Method::kRandomUniform:
        break;
    }
  }

  std::vector<int> labels(sub_labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    labels[t] = static_cast<int>(cols[static_cast<std::size_t>(sub_labels[t])]);
  }
  const FrameLabeling pred(std::move(labels), activity.actions);

  metrics::MetricOptions mopts;
  mopts.matching = cfg.f1_matching;
  if (cfg.ignore_background) {
    const auto it = std::find(activity.actions.begin(), activity.actions.end(),
                              *cfg.ignore_background);
    if (it != activity.actions.end()) {
      mopts.background = static_cast<int>(it - activity.actions.begin());
    }
  }
  rep.eval = metrics::evaluate_video(pred, gt, mopts);

  if (cfg.save_predictions) {
    io::write_gt(pred, *cfg.save_predictions / (video.id + ".txt"));
  }
  return rep;
}

double bin_attribute(analysis::BinDimension dim, const io::VideoEntry& video,
                     const io::ActivityEntry& activity) {
  const FrameLabeling gt = io::read_gt(video.ground_truth, activity.actions);
  if (dim == analysis::BinDimension::kDurationSeconds) {
    return static_cast<double>(gt.size()) / video.fps;
  }
  return static_cast<double>(segments_of(gt).size());
}

std::vector<std::string> selected_splits(const io::Manifest& manifest,
                                         const std::vector<std::string>& wanted) {
  std::vector<std::string> names;
  if (wanted.empty()) {
    for (const auto& [name, ids] : manifest.splits) names.push_back(name);
  } else {
    for (const auto& name : wanted) {
      if (!manifest.splits.contains(name)) {
        throw Error(ErrorCode::kManifest, fmt::format("manifest: unknown split '{}'", name));
      }
      names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
  }
  for (const auto& name : names) {
    if (manifest.splits.at(name).empty()) {
      throw Error(ErrorCode::kNoVideos, fmt::format("split '{}' has no videos", name));
    }
  }
  return names;
}

}  // namespace

std::uint64_t video_seed(std::uint64_t run_seed, std::string_view video_id,
                         std::uint64_t stream) {
  return splitmix64(splitmix64(run_seed ^ fnv1a(video_id)) + stream);
}

std::string_view to_string(Method m) { return enum_name(kMethods, m); }

Method parse_method(std::string_view s) { return parse_enum(kMethods, s, "method"); }

void RunConfig::validate() const {
  hp.validate();
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (ablate_prior && method != Method::kOvtas) {
    bad(fmt::format("--ablate-prior only applies to method ovtas, not {}", to_string(method)));
  }
  if ((ablate_l2 || ablate_stage1) && !uses_similarity(method)) {
    bad("--ablate-l2 / --ablate-stage1 need a similarity-based method");
  }
  if (!(lambda >= 0.0)) bad(fmt::format("lambda must be >= 0, got {}", lambda));
  if (k_bins && *k_bins == 0) bad("--k-bins must be >= 1");
  if (!bin_edges.empty()) {
    analysis::BinSpec{bins.value_or(analysis::BinDimension::kDurationSeconds), bin_edges}
        .validate();
  }
}

json RunConfig::to_json() const {
  json j;
  j["manifest"] = manifest.string();
  j["splits"] = splits;
  j["method"] = std::string(to_string(method));
  j["epsilon"] = hp.epsilon;
  j["rho"] = hp.rho;
  j["max_iters"] = hp.max_iters;
  j["tol"] = hp.tol;
  j["k_bins"] = k_bins ? json(*k_bins) : json(nullptr);
  j["lambda"] = lambda;
  j["seed"] = seed;
  j["ablate_prior"] = ablate_prior;
  j["ablate_l2"] = ablate_l2;
  j["ablate_stage1"] = ablate_stage1;
  j["stage1_permute"] = std::string(enum_name(kPermuteModes, stage1_mode));
  j["ignore_background"] = ignore_background ? json(*ignore_background) : json(nullptr);
  j["f1_matching"] = std::string(enum_name(kMatchings, f1_matching));
  j["pooling"] = std::string(enum_name(kPoolings, pooling));
  j["length_policy"] = std::string(enum_name(kLengthPolicies, length_policy));
  j["bins"] = bins ? json(std::string(analysis::to_string(*bins))) : json(nullptr);
  j["bin_edges"] = bin_edges;
  j["skip_failures"] = skip_failures;
  j["reserved"] = {{"alpha", alpha},
                   {"lambda_frames", lambda_frames},
                   {"lambda_actions", lambda_actions}};
  return j;
}

RunConfig RunConfig::from_json(const json& doc) {
  const json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
  RunConfig c;
  try {
    c.manifest = j.at("manifest").get<std::string>();
    c.splits = j.value("splits", std::vector<std::string>{});
    c.method = parse_method(j.value("method", std::string("ovtas")));
    c.hp.epsilon = j.value("epsilon", c.hp.epsilon);
    c.hp.rho = j.value("rho", c.hp.rho);
    c.hp.max_iters = j.value("max_iters", c.hp.max_iters);
    c.hp.tol = j.value("tol", c.hp.tol);
    if (j.contains("k_bins") && !j.at("k_bins").is_null()) {
      c.k_bins = j.at("k_bins").get<std::size_t>();
    }
    c.lambda = j.value("lambda", c.lambda);
    c.seed = j.value("seed", c.seed);
    c.ablate_prior = j.value("ablate_prior", false);
    c.ablate_l2 = j.value("ablate_l2", false);
    c.ablate_stage1 = j.value("ablate_stage1", false);
    c.stage1_mode = parse_enum(kPermuteModes, j.value("stage1_permute", std::string("rows")),
                               "stage-1 permutation mode");
    if (j.contains("ignore_background") && !j.at("ignore_background").is_null()) {
      c.ignore_background = j.at("ignore_background").get<std::string>();
    }
    c.f1_matching =
        parse_enum(kMatchings, j.value("f1_matching", std::string("optimal")), "F1 matching");
    c.pooling = parse_enum(kPoolings, j.value("pooling", std::string("video")), "pooling");
    c.length_policy = parse_enum(kLengthPolicies, j.value("length_policy", std::string("truncate")),
                                 "length policy");
    if (j.contains("bins") && !j.at("bins").is_null()) {
      c.bins = analysis::parse_bin_dimension(j.at("bins").get<std::string>());
    }
    c.bin_edges = j.value("bin_edges", std::vector<double>{});
    c.skip_failures = j.value("skip_failures", false);
    if (j.contains("reserved")) {
      const auto& r = j.at("reserved");
      c.alpha = r.value("alpha", c.alpha);
      c.lambda_frames = r.value("lambda_frames", c.lambda_frames);
      c.lambda_actions = r.value("lambda_actions", c.lambda_actions);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("bad run config: {}", e.what()));
  }
  return c;
}

EvalReport run_eval(const RunConfig& config) {
  config.validate();
  const io::Manifest manifest = io::load_manifest(config.manifest);
  const std::vector<std::string> split_names = selected_splits(manifest, config.splits);

  // video id -> splits it belongs to; std::map gives id order.
  std::map<std::string, std::vector<std::string>> membership;
  for (const auto& name : split_names) {
    for (const auto& id : manifest.splits.at(name)) membership[id].push_back(name);
  }
  std::vector<const io::VideoEntry*> videos;
  for (const auto& [id, splits] : membership) videos.push_back(&manifest.video(id));

  RunContext ctx{config, manifest, {}};
  if (uses_similarity(config.method)) {
    std::set<std::string> needed;
    for (const auto* v : videos) needed.insert(v->activity);
    for (const auto& name : needed) {
      ctx.action_embeddings.emplace(
          name, io::read_emb(*manifest.activity(name).action_embeddings));
    }
  }
  if (config.save_predictions) fs::create_directories(*config.save_predictions);

  std::vector<VideoOutcome> outcomes(videos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < videos.size(); i = next++) {
      try {
        outcomes[i].report = process_video(ctx, *videos[i]);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  std::size_t jobs = config.jobs != 0 ? config.jobs
                                      : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(1, videos.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  EvalReport report;
  report.config = config.to_json();
  std::map<std::string, std::vector<metrics::VideoEvaluation>> per_split;
  std::vector<analysis::BinnedVideo> binned;
  std::optional<analysis::BinSpec> bin_spec;
  if (config.bins) {
    bin_spec = config.bin_edges.empty()
                   ? analysis::preset_bins(manifest.dataset, *config.bins)
                   : analysis::BinSpec{*config.bins, config.bin_edges};
    if (!bin_spec) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("no {} bin preset for dataset '{}'; pass --bin-edges",
                              analysis::to_string(*config.bins), manifest.dataset));
    }
  }

  for (std::size_t i = 0; i < videos.size(); ++i) {
    const io::VideoEntry& v = *videos[i];
    VideoOutcome& out = outcomes[i];
    if (out.error) {
      if (!config.skip_failures) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("video '{}' failed: {}", v.id, *out.error));
      }
      spdlog::error("video '{}' failed: {}", v.id, *out.error);
      out.report.id = v.id;
      out.report.activity = v.activity;
      out.report.error = out.error;
    }
    out.report.splits = membership.at(v.id);
    if (!out.error) {
      for (const auto& s : out.report.splits) per_split[s].push_back(out.report.eval);
      if (bin_spec) {
        const double attr = bin_attribute(bin_spec->dimension, v, manifest.activity(v.activity));
        for (const auto& s : out.report.splits) {
          binned.push_back({v.id, s, attr, out.report.eval});
        }
      }
    }
    report.videos.push_back(std::move(out.report));
  }

  std::vector<std::vector<metrics::VideoEvaluation>> split_lists;
  for (auto& [name, evals] : per_split) {
    report.splits[name] = {evals.size(), metrics::aggregate(evals, config.pooling)};
    split_lists.push_back(evals);
  }
  if (!split_lists.empty()) report.aggregate = metrics::aggregate(split_lists, config.pooling);
  if (bin_spec) {
    report.bins = BinnedTable{bin_spec->dimension,
                              analysis::binned_metrics(binned, *bin_spec, config.pooling)};
  }
  return report;
}

DatasetStats run_stats(const io::Manifest& manifest, const std::vector<std::string>& splits) {
  std::set<std::string> ids;
  for (const auto& name : selected_splits(manifest, splits)) {
    ids.insert(manifest.splits.at(name).begin(), manifest.splits.at(name).end());
  }
  std::vector<analysis::AnnotatedVideo> videos;
  for (const auto& id : ids) {
    const io::VideoEntry& v = manifest.video(id);
    videos.push_back(
        {v.id, v.fps, io::read_gt(v.ground_truth, manifest.activity(v.activity).actions)});
  }
  if (videos.empty()) throw Error(ErrorCode::kNoVideos, "no videos");
  return {analysis::video_duration_stats(videos), analysis::segment_count_stats(videos),
          analysis::segment_duration_stats(videos)};
}

json stats_to_json(const DatasetStats& stats) {
  auto summary = [](const analysis::Summary& s) {
    return json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"count", s.count}};
  };
  return {{"video_duration_s", summary(stats.video_duration_s)},
          {"segments_per_video", summary(stats.segments_per_video)},
          {"segment_duration_s", summary(stats.segment_duration_s)}};
}

}  // namespace ovtas
