// SPDX-License-Identifier: Apache-2.0

#include "ovtas/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace ovtas {

void init_logging() {
  auto logger = spdlog::stderr_color_mt("ovtas");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("OVTAS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honor real ones.
    if (level != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(level);
    }
  }
}

}  // namespace ovtas
