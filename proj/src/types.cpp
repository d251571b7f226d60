// SPDX-License-Identifier: Apache-2.0

#include "ovtas/types.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ovtas/error.hpp"

namespace ovtas {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("matrix {}x{} needs {} values, got {}", rows_,
                            cols_, rows_ * cols_, data_.size()));
  }
}

bool Matrix::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

EmbeddingMatrix::EmbeddingMatrix(Matrix values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding matrix needs at least one row and one column");
  }
  if (!values_.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "embedding matrix has non-finite values");
  }
}

SimilarityMatrix::SimilarityMatrix(Matrix values, bool unit_inputs)
    : values_(std::move(values)), unit_inputs_(unit_inputs) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "similarity matrix is empty");
  }
  if (!values_.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "similarity matrix has non-finite values");
  }
  if (unit_inputs_) {
    for (double v : values_.data()) {
      if (v < -1.0 - 1e-6 || v > 1.0 + 1e-6) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("cosine similarity {} outside [-1, 1]", v));
      }
    }
  }
}

ProbMatrix::ProbMatrix(Matrix values) : values_(std::move(values)) {
  for (std::size_t t = 0; t < values_.rows(); ++t) {
    double sum = 0.0;
    for (double p : values_.row(t)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("probability {} outside [0, 1] in row {}", p, t));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("row {} sums to {}, not 1", t, sum));
    }
  }
}

FrameLabeling::FrameLabeling(std::vector<int> labels, std::size_t num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
  for (std::size_t t = 0; t < labels_.size(); ++t) {
    if (labels_[t] < 0 || static_cast<std::size_t>(labels_[t]) >= num_classes_) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("label {} at frame {} outside [0, {})",
                              labels_[t], t, num_classes_));
    }
  }
}

FrameLabeling::FrameLabeling(std::vector<int> labels,
                             std::vector<std::string> label_names)
    : FrameLabeling(std::move(labels), label_names.size()) {
  label_names_ = std::move(label_names);
}

std::vector<Segment> segments_of(std::span<const int> labels) {
  if (labels.empty()) {
    throw Error(ErrorCode::kEmptySequence, "empty sequence");
  }
  std::vector<Segment> segments;
  std::size_t start = 0;
  for (std::size_t t = 1; t <= labels.size(); ++t) {
    if (t == labels.size() || labels[t] != labels[start]) {
      segments.push_back({labels[start], start, t});
      start = t;
    }
  }
  return segments;
}

std::vector<Segment> segments_of(const FrameLabeling& labeling) {
  return segments_of(std::span<const int>(labeling.labels()));
}

std::vector<int> expand_segments(std::span<const Segment> segments) {
  std::vector<int> labels;
  for (const auto& seg : segments) {
    labels.insert(labels.end(), seg.length(), seg.label);
  }
  return labels;
}

}  // namespace ovtas
