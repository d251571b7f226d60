// SPDX-License-Identifier: Apache-2.0

#include "ovtas/report.hpp"

#include <algorithm>

namespace ovtas {

bool EvalReport::complete() const {
  return std::none_of(videos.begin(), videos.end(),
                      [](const VideoReport& v) { return v.error.has_value(); });
}

}  // namespace ovtas
