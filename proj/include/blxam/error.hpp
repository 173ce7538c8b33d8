// blxam/error.hpp

// Copyright 2026  The blxam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BLXAM_ERROR_HPP_
#define BLXAM_ERROR_HPP_

#include <sstream>
#include <stdexcept>
#include <string>

namespace blxam {

/// Base error for contract violations (bad shapes, bad arguments, bad state).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Configuration / usage problems. CLI exit code 1.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &msg) : Error(msg) {}
};

/// Problems with input data or on-disk artifacts. CLI exit code 2.
class DataError : public Error {
 public:
  explicit DataError(const std::string &msg) : Error(msg) {}
};

/// A violated internal invariant. CLI exit code 3.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string &msg) : Error(msg) {}
};

namespace detail {
inline std::string locate(const char *file, int line, const std::string &msg) {
  std::ostringstream os;
  os << msg << " (" << file << ":" << line << ")";
  return os.str();
}
}  // namespace detail

}  // namespace blxam

#define BLXAM_CHECK(cond, msg)                                               \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::ostringstream os_;                                                \
      os_ << msg;                                                            \
      throw ::blxam::Error(os_.str());                                       \
    }                                                                        \
  } while (0)

#define BLXAM_ASSERT(cond)                                                   \
  do {                                                                       \
    if (!(cond)) {                                                           \
      throw ::blxam::InvariantError(::blxam::detail::locate(                 \
          __FILE__, __LINE__, "invariant violated: " #cond));                \
    }                                                                        \
  } while (0)

#define BLXAM_CONFIG_CHECK(cond, msg)                                        \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::ostringstream os_;                                                \
      os_ << msg;                                                            \
      throw ::blxam::ConfigError(os_.str());                                 \
    }                                                                        \
  } while (0)

#define BLXAM_DATA_CHECK(cond, msg)                                          \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::ostringstream os_;                                                \
      os_ << msg;                                                            \
      throw ::blxam::DataError(os_.str());                                   \
    }                                                                        \
  } while (0)

#endif  // BLXAM_ERROR_HPP_
