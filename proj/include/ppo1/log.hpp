#pragma once

#include <functional>
#include <string_view>

namespace ppo1 {

using LogSink = std::function<void(std::string_view)>;

// Process-wide warning sink; defaults to stderr. Returns the previous sink.
LogSink set_log_sink(LogSink sink);
void log_warning(std::string_view message);

}  // namespace ppo1
