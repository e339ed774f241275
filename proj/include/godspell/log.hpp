#pragma once

#include <functional>
#include <string>

namespace godspell::log {

using Sink = std::function<void(const std::string&)>;

void warn(const std::string& message);
void info(const std::string& message);

// Replaces the warning sink (stderr by default). Returns the previous sink.
Sink set_warning_sink(Sink sink);
// Quiet mode drops warnings and info messages.
void set_quiet(bool quiet);

}  // namespace godspell::log
