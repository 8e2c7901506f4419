#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace p2c {

// All library failures surface as Error with a short machine-friendly
// category ("shape", "config", "data", "checkpoint", "io", "numeric",
// "usage") followed by a human-readable message.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message),
        category_(std::move(category)) {}

  const std::string& category() const { return category_; }

private:
  std::string category_;
};

[[noreturn]] inline void fail(const std::string& category, const std::string& message) {
  throw Error(category, message);
}

inline void check(bool ok, const std::string& category, const std::string& message) {
  if (!ok) fail(category, message);
}

}  // namespace p2c
