#include "godspell/log.hpp"

#include <iostream>
#include <mutex>

namespace godspell::log {
namespace {

std::mutex mutex;
bool quiet = false;
Sink warning_sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(mutex);
  if (warning_sink && !quiet) warning_sink(message);
}

void info(const std::string& message) {
  std::lock_guard lock(mutex);
  if (!quiet) std::cerr << message << '\n';
}

Sink set_warning_sink(Sink sink) {
  std::lock_guard lock(mutex);
  std::swap(sink, warning_sink);
  return sink;
}

void set_quiet(bool q) {
  std::lock_guard lock(mutex);
  quiet = q;
}

}  // namespace godspell::log
