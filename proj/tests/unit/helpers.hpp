// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "ovtas/error.hpp"
#include "ovtas/types.hpp"

namespace testutil {

/// The ErrorCode thrown by `fn`, or nullopt if it returned normally.
inline std::optional<ovtas::ErrorCode> error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ovtas::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline ovtas::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                   double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ovtas::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ovtas-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
