#pragma once

#include <stdexcept>
#include <string>

namespace godspell {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: missing files, malformed config or manifest rows.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace godspell
