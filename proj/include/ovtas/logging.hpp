// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace ovtas {

/// Configures the default spdlog logger (stderr) from the OVTAS_LOG
/// environment variable: trace, debug, info, warn (default), error, off.
void init_logging();

}  // namespace ovtas
