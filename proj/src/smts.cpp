// SPDX-License-Identifier: Apache-2.0

#include "ovtas/smts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ovtas/error.hpp"
#include "ovtas/faes.hpp"

namespace ovtas::smts {

namespace {

double log_sum_exp(std::span<const double> xs) {
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

// log P = f_t + g_j + kernel_tj, kernel = -cost / eps.
Matrix plan_from_potentials(const Matrix& kernel, const std::vector<double>& f,
                            const std::vector<double>& g) {
  Matrix p(kernel.rows(), kernel.cols());
  for (std::size_t t = 0; t < kernel.rows(); ++t) {
    for (std::size_t j = 0; j < kernel.cols(); ++j) {
      p(t, j) = std::exp(f[t] + g[j] + kernel(t, j));
    }
  }
  return p;
}

double marginal_violation(const Matrix& p, double u, double v) {
  double worst = 0.0;
  std::vector<double> col(p.cols(), 0.0);
  for (std::size_t t = 0; t < p.rows(); ++t) {
    double row = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      row += p(t, j);
      col[j] += p(t, j);
    }
    worst = std::max(worst, std::abs(row - u));
  }
  for (double c : col) worst = std::max(worst, std::abs(c - v));
  return worst;
}

constexpr std::size_t kMaxNewtonSteps = 50;

// Dual Newton refinement for problems on which Sinkhorn mixes slowly
// (near-ties at small eps, where its rate approaches 1). Solves
// rowsum(P) = u, colsum(P) = v for the log-potentials with f eliminated,
// leaving an (N-1)x(N-1) system; g[N-1] is pinned to fix the gauge. The
// step is backtracked on the l2 norm of the marginal residual.
void newton_polish(const Matrix& kernel, double u, double v, double tol,
                   std::vector<double>& f, std::vector<double>& g, TransportPlan& best) {
  const std::size_t rows = kernel.rows();
  const std::size_t cols = kernel.cols();
  const auto n = static_cast<Eigen::Index>(cols - 1);
  std::vector<double> r(rows), c(cols), a(rows), b(cols), df(rows), dg(cols, 0.0);

  auto residual = [&](const Matrix& p) {
    std::fill(c.begin(), c.end(), 0.0);
    double sq = 0.0;
    for (std::size_t t = 0; t < rows; ++t) {
      r[t] = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        r[t] += p(t, j);
        c[j] += p(t, j);
      }
      a[t] = u - r[t];
      sq += a[t] * a[t];
    }
    for (std::size_t j = 0; j < cols; ++j) {
      b[j] = v - c[j];
      sq += b[j] * b[j];
    }
    return std::sqrt(sq);
  };

  Matrix p = plan_from_potentials(kernel, f, g);
  double norm = residual(p);
  for (std::size_t step = 0; step < kMaxNewtonSteps; ++step) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      m(j, j) = c[static_cast<std::size_t>(j)];
      rhs(j) = b[static_cast<std::size_t>(j)];
    }
    for (std::size_t t = 0; t < rows; ++t) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double pj = p(t, static_cast<std::size_t>(j)) / r[t];
        rhs(j) -= pj * a[t];
        for (Eigen::Index k = 0; k < n; ++k) m(j, k) -= pj * p(t, static_cast<std::size_t>(k));
      }
    }
    const Eigen::VectorXd sol = m.ldlt().solve(rhs);
    if (!sol.allFinite()) break;
    for (Eigen::Index j = 0; j < n; ++j) dg[static_cast<std::size_t>(j)] = sol(j);
    for (std::size_t t = 0; t < rows; ++t) {
      double s = a[t];
      for (std::size_t j = 0; j < cols; ++j) s -= p(t, j) * dg[j];
      df[t] = s / r[t];
    }

    bool accepted = false;
    std::vector<double> f2(rows), g2(cols);
    for (double s = 1.0; s > 1e-10; s *= 0.5) {
      for (std::size_t t = 0; t < rows; ++t) f2[t] = f[t] + s * df[t];
      for (std::size_t j = 0; j < cols; ++j) g2[j] = g[j] + s * dg[j];
      Matrix p2 = plan_from_potentials(kernel, f2, g2);
      const double norm2 = residual(p2);
      if (std::isfinite(norm2) && norm2 < (1.0 - 1e-4 * s) * norm) {
        f.swap(f2);
        g.swap(g2);
        p = std::move(p2);
        norm = norm2;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      residual(p);  // restore r, c, a, b for the current iterate
      break;
    }
    ++best.newton_steps;
    const double err = marginal_violation(p, u, v);
    if (err < best.marginal_violation) {
      best.mass = p;
      best.row_potential = f;
      best.col_potential = g;
      best.marginal_violation = err;
    }
    if (err < tol) {
      best.converged = true;
      return;
    }
  }
}


}  // namespace

void HyperParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("epsilon must be > 0, got {}", epsilon));
  }
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("rho must be >= 0, got {}", rho));
  }
  if (max_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("tol must be > 0, got {}", tol));
  }
}

Matrix temporal_prior(std::size_t frames, std::size_t actions) {
  Matrix r(frames, actions);
  const double tf = static_cast<double>(frames);
  const double na = static_cast<double>(actions);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t j = 0; j < actions; ++j) {
      r(i, j) = std::abs(static_cast<double>(i) / tf - static_cast<double>(j) / na);
    }
  }
  return r;
}

Matrix build_cost(const SimilarityMatrix& s, const Matrix& prior, double rho) {
  if (prior.rows() != s.frames() || prior.cols() != s.actions()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("prior is {}x{}, similarity is {}x{}", prior.rows(),
                            prior.cols(), s.frames(), s.actions()));
  }
  Matrix cost(s.frames(), s.actions());
  for (std::size_t t = 0; t < s.frames(); ++t) {
    for (std::size_t j = 0; j < s.actions(); ++j) {
      cost(t, j) = (1.0 - s(t, j)) + rho * prior(t, j);
    }
  }
  return cost;
}

TransportPlan sinkhorn(const Matrix& cost, const HyperParams& hp) {
  hp.validate();
  if (cost.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sinkhorn: empty cost matrix");
  }
  if (!cost.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "sinkhorn: non-finite cost");
  }
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  const double u = 1.0 / static_cast<double>(rows);
  const double v = 1.0 / static_cast<double>(cols);
  const double log_u = std::log(u);
  const double log_v = std::log(v);

  Matrix kernel(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t j = 0; j < cols; ++j) kernel(t, j) = -cost(t, j) / hp.epsilon;
  }

  std::vector<double> f(rows, 0.0);
  std::vector<double> g(cols, 0.0);
  std::vector<double> scratch(std::max(rows, cols));
  std::vector<double> col_max(cols);
  std::vector<double> col_sum(cols);

  TransportPlan best;
  best.marginal_violation = std::numeric_limits<double>::infinity();

  for (std::size_t it = 1; it <= hp.max_iters; ++it) {
    for (std::size_t t = 0; t < rows; ++t) {
      const auto k = kernel.row(t);
      for (std::size_t j = 0; j < cols; ++j) scratch[j] = g[j] + k[j];
      f[t] = log_u - log_sum_exp({scratch.data(), cols});
    }
    // Column log-sum-exp, walked row-major.
    std::fill(col_max.begin(), col_max.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < rows; ++t) {
      for (std::size_t j = 0; j < cols; ++j) {
        col_max[j] = std::max(col_max[j], f[t] + kernel(t, j));
      }
    }
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    for (std::size_t t = 0; t < rows; ++t) {
      for (std::size_t j = 0; j < cols; ++j) {
        col_sum[j] += std::exp(f[t] + kernel(t, j) - col_max[j]);
      }
    }
    for (std::size_t j = 0; j < cols; ++j) {
      g[j] = log_v - (col_max[j] + std::log(col_sum[j]));
    }

    if (it % kCheckEvery == 0 || it == hp.max_iters) {
      Matrix p = plan_from_potentials(kernel, f, g);
      const double err = marginal_violation(p, u, v);
      if (err < best.marginal_violation) {
        best.mass = std::move(p);
        best.row_potential = f;
        best.col_potential = g;
        best.marginal_violation = err;
        best.iterations = it;
      }
      if (err < hp.tol) {
        best.converged = true;
        return best;
      }
    }
  }
  // Restart from the best iterate's potentials; a cols == 1 plan is exact.
  if (cols > 1) {
    f = best.row_potential;
    g = best.col_potential;
    newton_polish(kernel, u, v, hp.tol, f, g, best);
  }
  if (!best.converged) {
    spdlog::debug("sinkhorn: no convergence after {} iterations (violation {:.3g})",
                  hp.max_iters, best.marginal_violation);
  }
  return best;
}

FrameLabeling decode(const TransportPlan& plan) {
  return FrameLabeling(faes::argmax_rows(plan.mass), plan.actions());
}

SegmentResult segment_video(const SimilarityMatrix& s, const HyperParams& hp,
                            const SegmentOptions& opts) {
  hp.validate();
  const std::size_t frames = s.frames();
  const std::size_t actions = s.actions();
  if (opts.ablate_stage2) {
    // softmax is monotone per row, so its argmax is the argmax of S.
    const ProbMatrix p = faes::softmax_rows(s);
    return {FrameLabeling(faes::argmax_rows(p.values()), actions)};
  }
  if (actions == 1) {
    return {FrameLabeling(std::vector<int>(frames, 0), actions)};
  }
  const Matrix prior = opts.ablate_prior ? Matrix(frames, actions, 0.0)
                                         : temporal_prior(frames, actions);
  const Matrix cost = build_cost(s, prior, opts.ablate_prior ? 0.0 : hp.rho);
  const TransportPlan plan = sinkhorn(cost, hp);
  return {decode(plan), true, plan.converged, plan.iterations,
          plan.marginal_violation};
}

SegmentResult segment_video_shuffled(const SimilarityMatrix& s,
                                     const HyperParams& hp,
                                     const SegmentOptions& opts,
                                     std::uint64_t seed) {
  const std::size_t actions = s.actions();
  std::vector<std::size_t> order(actions);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // Column k of the shuffled matrix is original action order[k].
  Matrix shuffled(s.frames(), actions);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    for (std::size_t k = 0; k < actions; ++k) shuffled(t, k) = s(t, order[k]);
  }
  SegmentResult res = segment_video(SimilarityMatrix(std::move(shuffled), s.unit_inputs()),
                                    hp, opts);
  std::vector<int> labels = res.labeling.labels();
  for (int& l : labels) l = static_cast<int>(order[static_cast<std::size_t>(l)]);
  res.labeling = FrameLabeling(std::move(labels), actions);
  return res;
}

}  // namespace ovtas::smts
