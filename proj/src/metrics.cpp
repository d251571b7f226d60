// SPDX-License-Identifier: Apache-2.0

#include "ovtas/metrics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ovtas/error.hpp"

namespace ovtas::metrics {

namespace {

void check_lengths(const FrameLabeling& pred, const FrameLabeling& gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("prediction has {} frames, ground truth {}",
                            pred.size(), gt.size()));
  }
}

std::vector<Segment> scored_segments(const FrameLabeling& l,
                                     const MetricOptions& opts) {
  if (l.size() == 0) return {};
  std::vector<Segment> segs = segments_of(l);
  if (opts.background) {
    std::erase_if(segs, [&](const Segment& s) { return s.label == *opts.background; });
  }
  return segs;
}

std::size_t greedy_matches(const std::vector<Segment>& p,
                           const std::vector<Segment>& g, double tau) {
  std::vector<bool> used(g.size(), false);
  std::size_t tp = 0;
  for (const auto& ps : p) {
    double best_iou = 0.0;
    std::size_t best = g.size();
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (used[j] || g[j].label != ps.label) continue;
      const double iou = interval_iou(ps, g[j]);
      if (best == g.size() || iou > best_iou) {
        best_iou = iou;
        best = j;
      }
    }
    if (best < g.size() && best_iou >= tau) {
      used[best] = true;
      ++tp;
    }
  }
  return tp;
}

// Maximum bipartite matching (Kuhn's augmenting paths) on the graph whose
// edges join same-class segments with IoU >= tau.
class SegmentMatcher {
 public:
  SegmentMatcher(const std::vector<Segment>& p, const std::vector<Segment>& g,
                 double tau)
      : adj_(p.size()), owner_(g.size(), kNone) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j].label == p[i].label && g[j].start < p[i].end &&
            p[i].start < g[j].end && interval_iou(p[i], g[j]) >= tau) {
          adj_[i].push_back(j);
        }
      }
    }
  }

  std::size_t solve() {
    std::size_t matched = 0;
    std::vector<bool> seen(owner_.size());
    for (std::size_t i = 0; i < adj_.size(); ++i) {
      if (adj_[i].empty()) continue;
      std::fill(seen.begin(), seen.end(), false);
      if (augment(i, seen)) ++matched;
    }
    return matched;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  bool augment(std::size_t i, std::vector<bool>& seen) {
    for (std::size_t j : adj_[i]) {
      if (seen[j]) continue;
      seen[j] = true;
      if (owner_[j] == kNone || augment(owner_[j], seen)) {
        owner_[j] = i;
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> owner_;
};

std::size_t optimal_matches(const std::vector<Segment>& p,
                            const std::vector<Segment>& g, double tau) {
  return SegmentMatcher(p, g, tau).solve();
}

}  // namespace

void VideoMetrics::update_avg() {
  avg = (acc + edit + f1_10 + f1_25 + f1_50) / 5.0;
}

double f1_from_counts(const F1Counts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return 100.0 * static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double interval_iou(const Segment& a, const Segment& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  if (hi <= lo) return 0.0;
  const double inter = static_cast<double>(hi - lo);
  return inter / (static_cast<double>(a.length() + b.length()) - inter);
}

double frame_accuracy(const FrameLabeling& pred, const FrameLabeling& gt,
                      const MetricOptions& opts) {
  check_lengths(pred, gt);
  std::size_t correct = 0;
  std::size_t scored = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    if (opts.background && gt[t] == *opts.background) continue;
    ++scored;
    if (pred[t] == gt[t]) ++correct;
  }
  if (scored == 0) return 0.0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(scored);
}

std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_score(const FrameLabeling& pred, const FrameLabeling& gt,
                  const MetricOptions& opts) {
  std::vector<int> p;
  std::vector<int> g;
  for (const auto& s : scored_segments(pred, opts)) p.push_back(s.label);
  for (const auto& s : scored_segments(gt, opts)) g.push_back(s.label);
  const std::size_t longest = std::max(p.size(), g.size());
  if (longest == 0) return 100.0;
  const double d = static_cast<double>(levenshtein(p, g));
  return std::max(0.0, 100.0 * (1.0 - d / static_cast<double>(longest)));
}

F1Counts f1_counts(const FrameLabeling& pred, const FrameLabeling& gt,
                   double tau, const MetricOptions& opts) {
  check_lengths(pred, gt);
  const auto p = scored_segments(pred, opts);
  const auto g = scored_segments(gt, opts);
  const std::size_t tp = opts.matching == Matching::kGreedy
                             ? greedy_matches(p, g, tau)
                             : optimal_matches(p, g, tau);
  return {tp, p.size() - tp, g.size() - tp};
}

double f1_at(const FrameLabeling& pred, const FrameLabeling& gt, double tau,
             const MetricOptions& opts) {
  return f1_from_counts(f1_counts(pred, gt, tau, opts));
}

VideoEvaluation evaluate_video(const FrameLabeling& pred, const FrameLabeling& gt,
                               const MetricOptions& opts) {
  check_lengths(pred, gt);
  VideoEvaluation ev;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    if (opts.background && gt[t] == *opts.background) continue;
    ++ev.counts.scored_frames;
    if (pred[t] == gt[t]) ++ev.counts.correct_frames;
  }
  ev.metrics.acc = frame_accuracy(pred, gt, opts);
  ev.metrics.edit = edit_score(pred, gt, opts);
  std::array<double*, 3> f1 = {&ev.metrics.f1_10, &ev.metrics.f1_25,
                               &ev.metrics.f1_50};
  for (std::size_t i = 0; i < kF1Thresholds.size(); ++i) {
    const F1Counts c = f1_counts(pred, gt, kF1Thresholds[i], opts);
    ev.counts.tp[i] = c.tp;
    ev.counts.fp[i] = c.fp;
    ev.counts.fn[i] = c.fn;
    *f1[i] = f1_from_counts(c);
  }
  ev.metrics.update_avg();
  return ev;
}

VideoMetrics aggregate(const std::vector<std::vector<VideoEvaluation>>& splits,
                       Pooling pooling) {
  VideoMetrics total;
  std::size_t used_splits = 0;
  for (const auto& videos : splits) {
    if (videos.empty()) continue;
    const VideoMetrics m = aggregate(videos, pooling);
    total.acc += m.acc;
    total.edit += m.edit;
    total.f1_10 += m.f1_10;
    total.f1_25 += m.f1_25;
    total.f1_50 += m.f1_50;
    ++used_splits;
  }
  if (used_splits == 0) {
    throw Error(ErrorCode::kNoVideos, "aggregate: no videos");
  }
  const double n = static_cast<double>(used_splits);
  total.acc /= n;
  total.edit /= n;
  total.f1_10 /= n;
  total.f1_25 /= n;
  total.f1_50 /= n;
  total.update_avg();
  return total;
}

VideoMetrics aggregate(const std::vector<VideoEvaluation>& videos,
                       Pooling pooling) {
  if (videos.empty()) {
    throw Error(ErrorCode::kNoVideos, "aggregate: no videos");
  }
  VideoMetrics out;
  const double n = static_cast<double>(videos.size());
  for (const auto& v : videos) out.edit += v.metrics.edit;
  out.edit /= n;

  if (pooling == Pooling::kPerVideo) {
    for (const auto& v : videos) {
      out.acc += v.metrics.acc;
      out.f1_10 += v.metrics.f1_10;
      out.f1_25 += v.metrics.f1_25;
      out.f1_50 += v.metrics.f1_50;
    }
    out.acc /= n;
    out.f1_10 /= n;
    out.f1_25 /= n;
    out.f1_50 /= n;
  } else {
    VideoCounts sum;
    for (const auto& v : videos) {
      sum.correct_frames += v.counts.correct_frames;
      sum.scored_frames += v.counts.scored_frames;
      for (std::size_t i = 0; i < 3; ++i) {
        sum.tp[i] += v.counts.tp[i];
        sum.fp[i] += v.counts.fp[i];
        sum.fn[i] += v.counts.fn[i];
      }
    }
    out.acc = sum.scored_frames == 0
                  ? 0.0
                  : 100.0 * static_cast<double>(sum.correct_frames) /
                        static_cast<double>(sum.scored_frames);
    std::array<double*, 3> f1 = {&out.f1_10, &out.f1_25, &out.f1_50};
    for (std::size_t i = 0; i < 3; ++i) {
      *f1[i] = f1_from_counts({sum.tp[i], sum.fp[i], sum.fn[i]});
    }
  }
  out.update_avg();
  return out;
}

}  // namespace ovtas::metrics
