// SPDX-License-Identifier: Apache-2.0
//
// Core value types shared by every stage of the segmentation engine.
// All of them are immutable after construction and validate their
// invariants in the constructor.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ovtas {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Frame (T x C) or action (N x C) embeddings.
class EmbeddingMatrix {
 public:
  /// Throws kInvalidArgument on an empty shape and kNonFinite on NaN/Inf.
  explicit EmbeddingMatrix(Matrix values, bool normalized = false);

  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }
  bool normalized() const noexcept { return normalized_; }
  const Matrix& values() const noexcept { return values_; }
  std::span<const double> row(std::size_t r) const { return values_.row(r); }

 private:
  Matrix values_;
  bool normalized_;
};

/// T x N frame-to-action similarities.
class SimilarityMatrix {
 public:
  /// `unit_inputs` records that both operands were l2-normalized, in which
  /// case every entry must lie in [-1 - 1e-6, 1 + 1e-6].
  explicit SimilarityMatrix(Matrix values, bool unit_inputs = false);

  std::size_t frames() const noexcept { return values_.rows(); }
  std::size_t actions() const noexcept { return values_.cols(); }
  bool unit_inputs() const noexcept { return unit_inputs_; }
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t t, std::size_t n) const { return values_(t, n); }

 private:
  Matrix values_;
  bool unit_inputs_;
};

/// Row-stochastic T x N matrix.
class ProbMatrix {
 public:
  explicit ProbMatrix(Matrix values);

  std::size_t frames() const noexcept { return values_.rows(); }
  std::size_t actions() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t t, std::size_t n) const { return values_(t, n); }

 private:
  Matrix values_;
};

/// Coupling returned by the entropic OT solver together with its
/// convergence diagnostics. Feasibility is reported, not enforced: a
/// non-converged solve still yields a plan.
struct TransportPlan {
  Matrix mass;
  /// Log-domain dual potentials; log(mass) = row_potential + col_potential - cost/eps.
  std::vector<double> row_potential;
  std::vector<double> col_potential;
  bool converged = false;
  /// Sinkhorn sweeps run.
  std::size_t iterations = 0;
  /// Dual Newton steps taken after Sinkhorn exhausted its budget.
  std::size_t newton_steps = 0;
  /// Max of the l-infinity violations of the row and column marginals.
  double marginal_violation = 0.0;

  std::size_t frames() const noexcept { return mass.rows(); }
  std::size_t actions() const noexcept { return mass.cols(); }
};

/// Maximal run of one label over [start, end).
struct Segment {
  int label = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Per-frame action indices over a vocabulary of `num_classes` labels.
class FrameLabeling {
 public:
  FrameLabeling(std::vector<int> labels, std::size_t num_classes);
  FrameLabeling(std::vector<int> labels, std::vector<std::string> label_names);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& label_names() const noexcept {
    return label_names_;
  }
  int operator[](std::size_t t) const { return labels_[t]; }

 private:
  std::vector<int> labels_;
  std::size_t num_classes_;
  std::vector<std::string> label_names_;
};

/// Run-length view of a label sequence. Throws kEmptySequence on empty input.
std::vector<Segment> segments_of(std::span<const int> labels);
std::vector<Segment> segments_of(const FrameLabeling& labeling);

/// Inverse of segments_of.
std::vector<int> expand_segments(std::span<const Segment> segments);

}  // namespace ovtas
