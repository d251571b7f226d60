// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: `ovtas eval`, `ovtas stats`, `ovtas toy`.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ovtas/dataset_io.hpp"
#include "ovtas/error.hpp"
#include "ovtas/logging.hpp"
#include "ovtas/pipeline.hpp"
#include "ovtas/toy.hpp"

namespace {

using ovtas::RunConfig;
using nlohmann::json;

// Raw flag values; only flags the user actually passed are applied, so a
// loaded --config is overridden selectively.
struct EvalFlags {
  std::string config;
  std::string manifest;
  std::vector<std::string> splits;
  std::string method;
  double epsilon = 0.0;
  double rho = 0.0;
  std::size_t max_iters = 0;
  double tol = 0.0;
  std::size_t k_bins = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string stage1_permute;
  std::string ignore_background;
  std::string f1_matching;
  std::string pooling;
  std::string length_policy;
  std::string bins;
  std::vector<double> bin_edges;
  std::size_t jobs = 0;
  std::string out;
  std::string save_predictions;
};

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw ovtas::Error(ovtas::ErrorCode::kIo, fmt::format("cannot write '{}'", path));
}

RunConfig build_config(const CLI::App& cmd, const EvalFlags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ovtas::Error(ovtas::ErrorCode::kIo, fmt::format("cannot read '{}'", f.config));
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ovtas::Error(ovtas::ErrorCode::kInvalidArgument,
                         fmt::format("{}: {}", f.config, e.what()));
    }
    c = RunConfig::from_json(doc);
  }
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--manifest")) c.manifest = f.manifest;
  if (given("--split")) c.splits = f.splits;
  if (given("--method")) c.method = ovtas::parse_method(f.method);
  if (given("--ablate-stage2")) {
    if (given("--method") && c.method != ovtas::Method::kStage2Ablation &&
        c.method != ovtas::Method::kOvtas) {
      throw ovtas::Error(ovtas::ErrorCode::kInvalidArgument,
                         "--ablate-stage2 conflicts with --method " + f.method);
    }
    c.method = ovtas::Method::kStage2Ablation;
  }
  if (given("--epsilon")) c.hp.epsilon = f.epsilon;
  if (given("--rho")) c.hp.rho = f.rho;
  if (given("--max-iters")) c.hp.max_iters = f.max_iters;
  if (given("--tol")) c.hp.tol = f.tol;
  if (given("--k-bins")) c.k_bins = f.k_bins;
  if (given("--lambda")) c.lambda = f.lambda;
  if (given("--seed")) c.seed = f.seed;
  if (given("--ablate-prior")) c.ablate_prior = true;
  if (given("--ablate-l2")) c.ablate_l2 = true;
  if (given("--ablate-stage1")) c.ablate_stage1 = true;
  if (given("--skip-failures")) c.skip_failures = true;
  if (given("--ignore-background")) c.ignore_background = f.ignore_background;
  if (given("--bins")) c.bins = ovtas::analysis::parse_bin_dimension(f.bins);
  if (given("--bin-edges")) c.bin_edges = f.bin_edges;

  // Enum-valued options go through the JSON parser so names stay in one place.
  json overrides = c.to_json();
  bool patched = false;
  for (const auto& [flag, key, value] :
       {std::tuple{"--stage1-permute", "stage1_permute", &f.stage1_permute},
        std::tuple{"--f1-matching", "f1_matching", &f.f1_matching},
        std::tuple{"--pooling", "pooling", &f.pooling},
        std::tuple{"--length-policy", "length_policy", &f.length_policy}}) {
    if (given(flag)) {
      overrides[key] = *value;
      patched = true;
    }
  }
  if (patched) c = RunConfig::from_json(overrides);

  if (given("--jobs")) c.jobs = f.jobs;
  if (given("--save-predictions")) c.save_predictions = f.save_predictions;
  if (c.manifest.empty()) {
    throw ovtas::Error(ovtas::ErrorCode::kInvalidArgument, "--manifest (or --config) is required");
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  ovtas::init_logging();
  CLI::App app{"Training-free temporal action segmentation"};
  app.require_subcommand(1);

  EvalFlags ef;
  CLI::App* eval = app.add_subcommand("eval", "Segment and score the videos of a manifest");
  eval->add_option("--config", ef.config, "Results file or bare config to re-run from");
  eval->add_option("--manifest", ef.manifest, "Dataset manifest (JSON)");
  eval->add_option("--split", ef.splits, "Split(s) to evaluate; default all");
  eval->add_option("--method", ef.method,
                   "ovtas | stage2_ablation | random_uniform | es_mean | es_vote | es_nrp");
  eval->add_option("--epsilon", ef.epsilon, "Entropic regularization (0.07)");
  eval->add_option("--rho", ef.rho, "Temporal prior weight (0.04)");
  eval->add_option("--max-iters", ef.max_iters, "Sinkhorn iteration cap (1000)");
  eval->add_option("--tol", ef.tol, "Sinkhorn marginal tolerance (1e-6)");
  eval->add_option("--k-bins", ef.k_bins, "Equal-split bins; default the action count");
  eval->add_option("--lambda", ef.lambda, "No-repeat penalty for es_nrp (0.05)");
  eval->add_option("--seed", ef.seed, "Seed for every random choice (0)");
  eval->add_flag("--ablate-prior", "Drop the temporal prior");
  eval->add_flag("--ablate-l2", "Skip L2 normalization");
  eval->add_flag("--ablate-stage1", "Randomly permute embeddings before matching");
  eval->add_flag("--ablate-stage2", "Per-frame argmax instead of transport");
  eval->add_option("--stage1-permute", ef.stage1_permute, "rows | features");
  eval->add_option("--ignore-background", ef.ignore_background,
                   "Exclude this label from all metrics");
  eval->add_option("--f1-matching", ef.f1_matching, "optimal | greedy");
  eval->add_option("--pooling", ef.pooling, "video | pooled");
  eval->add_option("--length-policy", ef.length_policy, "truncate | strict");
  eval->add_option("--bins", ef.bins, "duration | segcount");
  eval->add_option("--bin-edges", ef.bin_edges, "Comma-separated lower bin edges")
      ->delimiter(',');
  eval->add_flag("--skip-failures", "Record failing videos and continue");
  eval->add_option("--jobs", ef.jobs, "Parallel videos; default all cores");
  eval->add_option("--out", ef.out, "Results file; default stdout");
  eval->add_option("--save-predictions", ef.save_predictions,
                   "Directory for per-video predicted label files");

  std::string stats_manifest;
  std::vector<std::string> stats_splits;
  std::string stats_out;
  CLI::App* stats = app.add_subcommand("stats", "Ground-truth statistics of a manifest");
  stats->add_option("--manifest", stats_manifest, "Dataset manifest (JSON)")->required();
  stats->add_option("--split", stats_splits, "Split(s); default all");
  stats->add_option("--out", stats_out, "Output file; default stdout");

  std::string toy_out;
  std::uint64_t toy_seed = ovtas::toy::ToyConfig{}.seed;
  CLI::App* toy = app.add_subcommand("toy", "Write a synthetic dataset");
  toy->add_option("--out", toy_out, "Output directory")->required();
  toy->add_option("--seed", toy_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      const RunConfig config = build_config(*eval, ef);
      const ovtas::EvalReport report = ovtas::run_eval(config);
      write_text(ovtas::io::dump_json(ovtas::io::report_to_json(report)), ef.out);
      return report.complete() ? EXIT_SUCCESS : EXIT_FAILURE;
    }
    if (stats->parsed()) {
      const auto manifest =
          ovtas::io::load_manifest(stats_manifest, {.require_embeddings = false});
      write_text(ovtas::io::dump_json(ovtas::stats_to_json(ovtas::run_stats(manifest, stats_splits))),
                 stats_out);
      return EXIT_SUCCESS;
    }
    if (toy->parsed()) {
      ovtas::toy::ToyConfig cfg;
      cfg.seed = toy_seed;
      std::cout << ovtas::toy::write_toy_dataset(toy_out, cfg).string() << "\n";
      return EXIT_SUCCESS;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
