#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace muses::detail {

// The engine's logger, created on first use.
spdlog::logger& log();

}  // namespace muses::detail
