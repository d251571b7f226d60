// SPDX-License-Identifier: Apache-2.0

#include "ovtas/toy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "ovtas/dataset_io.hpp"
#include "ovtas/error.hpp"

namespace ovtas::toy {

namespace fs = std::filesystem;

namespace {

std::vector<double> unit_gaussian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  for (double& x : v) {
    x = normal(rng);
    sq += x * x;
  }
  for (double& x : v) x /= std::sqrt(sq);
  return v;
}

// Splits `frames` into `parts` positive lengths with +-30% jitter around equal.
std::vector<std::size_t> durations(std::size_t frames, std::size_t parts,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(0.7, 1.3);
  std::vector<double> w(parts);
  for (double& x : w) x = jitter(rng);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> out(parts);
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < parts; ++i) {
    out[i] = std::max<std::size_t>(1, static_cast<std::size_t>(frames * w[i] / total));
    used += out[i];
  }
  out.back() = frames - used;
  return out;
}

}  // namespace

fs::path write_toy_dataset(const fs::path& dir, const ToyConfig& cfg) {
  if (cfg.activities == 0 || cfg.actions_per_activity == 0 || cfg.videos_per_activity == 0 ||
      cfg.dim < 2 || cfg.min_frames < cfg.actions_per_activity ||
      cfg.max_frames < cfg.min_frames) {
    throw Error(ErrorCode::kInvalidArgument, "invalid toy dataset configuration");
  }
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "groundTruth");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(cfg.min_frames, cfg.max_frames);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::vector<double> shared = unit_gaussian(cfg.dim, rng);

  nlohmann::json manifest;
  manifest["dataset"] = "toy";
  nlohmann::json videos = nlohmann::json::array();
  std::vector<std::string> split1;
  std::vector<std::string> split2;

  for (std::size_t a = 0; a < cfg.activities; ++a) {
    const std::string activity = fmt::format("activity{}", a);
    std::vector<std::string> names;
    std::vector<std::vector<double>> directions;
    Matrix action_emb(cfg.actions_per_activity, cfg.dim);
    for (std::size_t n = 0; n < cfg.actions_per_activity; ++n) {
      names.push_back(fmt::format("{}_step{}", activity, n));
      directions.push_back(unit_gaussian(cfg.dim, rng));
      // Action 0 carries the full shared offset, the rest a random fraction.
      const double bias = n == 0 ? cfg.action_bias : cfg.action_bias * 0.3 * unit(rng);
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        action_emb(n, c) = directions[n][c] + bias * shared[c];
      }
    }
    const std::string action_file = fmt::format("features/{}_actions.ovte", activity);
    io::write_emb(EmbeddingMatrix(action_emb), dir / action_file);
    manifest["activities"][activity] = {{"actions", names},
                                        {"action_embeddings", action_file}};

    for (std::size_t v = 0; v < cfg.videos_per_activity; ++v) {
      const std::string id = fmt::format("{}_video{:02}", activity, v);
      const std::size_t frames = length(rng);
      std::vector<std::size_t> order(cfg.actions_per_activity);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      const auto lens = durations(frames, order.size(), rng);

      std::vector<int> labels;
      for (std::size_t s = 0; s < order.size(); ++s) {
        labels.insert(labels.end(), lens[s], static_cast<int>(order[s]));
      }
      Matrix x(frames, cfg.dim);
      for (std::size_t t = 0; t < frames; ++t) {
        const auto& dirn = directions[static_cast<std::size_t>(labels[t])];
        for (std::size_t c = 0; c < cfg.dim; ++c) {
          x(t, c) = cfg.signal * dirn[c] + cfg.frame_bias * shared[c] + cfg.noise * normal(rng);
        }
      }
      const std::string emb_file = fmt::format("features/{}.ovte", id);
      const std::string gt_file = fmt::format("groundTruth/{}.txt", id);
      io::write_emb(EmbeddingMatrix(std::move(x)), dir / emb_file);
      io::write_gt(FrameLabeling(labels, names), dir / gt_file);
      videos.push_back({{"id", id},
                        {"activity", activity},
                        {"fps", cfg.fps},
                        {"frame_embeddings", emb_file},
                        {"ground_truth", gt_file}});
      (v % 2 == 0 ? split1 : split2).push_back(id);
    }
  }
  manifest["videos"] = std::move(videos);
  manifest["splits"] = {{"split1", split1}, {"split2", split2}};

  const fs::path path = dir / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  out << io::dump_json(manifest);
  if (!out) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  }
  return path;
}

}  // namespace ovtas::toy
