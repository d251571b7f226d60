// SPDX-License-Identifier: Apache-2.0

#include "ovtas/baselines.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "ovtas/error.hpp"
#include "ovtas/faes.hpp"

namespace ovtas::baselines {

namespace {

int argmax(std::span<const double> xs) {
  return static_cast<int>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

// (value, index) ordering: higher value wins, then lower index.
struct Candidate {
  double value;
  int index;
  bool beats(const Candidate& o) const {
    return value > o.value || (value == o.value && index < o.index);
  }
};

}  // namespace

FrameLabeling random_uniform(std::size_t frames, std::size_t classes,
                             std::uint64_t seed) {
  if (classes == 0) {
    throw Error(ErrorCode::kInvalidArgument, "random_uniform needs N >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, static_cast<int>(classes) - 1);
  std::vector<int> labels(frames);
  for (int& l : labels) l = dist(rng);
  return FrameLabeling(std::move(labels), classes);
}

BinPartition equal_bins(std::size_t frames, std::size_t bins) {
  if (bins < 1 || bins > frames) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("need 1 <= K <= T, got K={} T={}", bins, frames));
  }
  BinPartition p;
  p.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) p.edges[k] = k * frames / bins;
  return p;
}

Matrix bin_mean_scores(const SimilarityMatrix& s, const BinPartition& bins) {
  Matrix scores(bins.bins(), s.actions(), 0.0);
  for (std::size_t k = 0; k < bins.bins(); ++k) {
    const double n = static_cast<double>(bins.end(k) - bins.begin(k));
    for (std::size_t t = bins.begin(k); t < bins.end(k); ++t) {
      for (std::size_t c = 0; c < s.actions(); ++c) scores(k, c) += s(t, c);
    }
    for (double& v : scores.row(k)) v /= n;
  }
  return scores;
}

FrameLabeling expand_bins(const std::vector<int>& bin_labels,
                          const BinPartition& bins, std::size_t classes) {
  std::vector<int> labels(bins.edges.back());
  for (std::size_t k = 0; k < bins.bins(); ++k) {
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(bins.begin(k)),
              labels.begin() + static_cast<std::ptrdiff_t>(bins.end(k)),
              bin_labels[k]);
  }
  return FrameLabeling(std::move(labels), classes);
}

FrameLabeling es_mean(const SimilarityMatrix& s, std::size_t bins) {
  const BinPartition part = equal_bins(s.frames(), bins);
  const Matrix scores = bin_mean_scores(s, part);
  std::vector<int> y(part.bins());
  for (std::size_t k = 0; k < part.bins(); ++k) y[k] = argmax(scores.row(k));
  return expand_bins(y, part, s.actions());
}

FrameLabeling es_vote(const SimilarityMatrix& s, std::size_t bins) {
  const BinPartition part = equal_bins(s.frames(), bins);
  const Matrix scores = bin_mean_scores(s, part);
  const std::vector<int> winners = faes::argmax_rows(s.values());
  std::vector<int> y(part.bins());
  std::vector<std::size_t> votes(s.actions());
  for (std::size_t k = 0; k < part.bins(); ++k) {
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t t = part.begin(k); t < part.end(k); ++t) {
      ++votes[static_cast<std::size_t>(winners[t])];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.actions(); ++c) {
      if (votes[c] > votes[best] ||
          (votes[c] == votes[best] && scores(k, c) > scores(k, best))) {
        best = c;
      }
    }
    y[k] = static_cast<int>(best);
  }
  return expand_bins(y, part, s.actions());
}

std::vector<int> nrp_decode(const Matrix& scores, double lambda) {
  const std::size_t bins = scores.rows();
  const std::size_t classes = scores.cols();
  if (bins == 0 || classes == 0) return {};

  std::vector<double> prev(scores.row(0).begin(), scores.row(0).end());
  std::vector<double> cur(classes);
  // back[k][c]: best predecessor class of c at bin k.
  std::vector<std::vector<int>> back(bins, std::vector<int>(classes, 0));

  for (std::size_t k = 1; k < bins; ++k) {
    // Best and runner-up of prev under the (value desc, index asc) order.
    Candidate first{prev[0], 0};
    Candidate second{-std::numeric_limits<double>::infinity(), -1};
    for (std::size_t c = 1; c < classes; ++c) {
      const Candidate cand{prev[c], static_cast<int>(c)};
      if (cand.beats(first)) {
        second = first;
        first = cand;
      } else if (second.index < 0 || cand.beats(second)) {
        second = cand;
      }
    }
    for (std::size_t c = 0; c < classes; ++c) {
      const int ci = static_cast<int>(c);
      const Candidate stay{prev[c] - lambda, ci};
      Candidate chosen = stay;
      const Candidate& other = (first.index == ci) ? second : first;
      if (other.index >= 0 && other.beats(chosen)) chosen = other;
      back[k][c] = chosen.index;
      cur[c] = scores(k, c) + chosen.value;
    }
    std::swap(prev, cur);
  }

  std::vector<int> path(bins);
  path[bins - 1] = argmax(prev);
  for (std::size_t k = bins - 1; k > 0; --k) {
    path[k - 1] = back[k][static_cast<std::size_t>(path[k])];
  }
  return path;
}

double nrp_objective(const Matrix& scores, const std::vector<int>& path,
                     double lambda) {
  double total = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    total += scores(k, static_cast<std::size_t>(path[k]));
    if (k > 0 && path[k] == path[k - 1]) total -= lambda;
  }
  return total;
}

FrameLabeling es_nrp(const SimilarityMatrix& s, std::size_t bins, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("lambda must be >= 0, got {}", lambda));
  }
  const BinPartition part = equal_bins(s.frames(), bins);
  const Matrix scores = bin_mean_scores(s, part);
  return expand_bins(nrp_decode(scores, lambda), part, s.actions());
}

}  // namespace ovtas::baselines
