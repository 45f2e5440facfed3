#pragma once

#include <functional>
#include <string_view>

namespace muses {

// "trace", "debug", "info", "warn", "error" or "off".
void set_log_level(std::string_view level);

// Every formatted log line is also handed to `observer`; pass nullptr to detach.
void set_log_observer(std::function<void(std::string_view)> observer);

}  // namespace muses
