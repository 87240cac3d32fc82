#pragma once

#include <stdexcept>
#include <string>

namespace archapt {

struct RangeError : std::out_of_range {
  explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

struct LayoutError : std::invalid_argument {
  explicit LayoutError(const std::string& what) : std::invalid_argument(what) {}
};

struct AllocError : std::invalid_argument {
  explicit AllocError(const std::string& what) : std::invalid_argument(what) {}
};

struct OutOfMemoryError : std::runtime_error {
  explicit OutOfMemoryError(const std::string& what) : std::runtime_error(what) {}
};

struct UsageError : std::logic_error {
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

struct StateError : std::logic_error {
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

struct InternalError : std::logic_error {
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

struct RecoveryError : std::runtime_error {
  explicit RecoveryError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace archapt
