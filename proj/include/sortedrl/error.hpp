// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sortedrl {

enum class ErrorCode {
  invalid_argument = 1,
  duplicate_request = 2,
  unknown_request = 3,
  invalid_state = 4,
  parse = 5,
  io = 6,
};

/// Exception type for every failure raised by the core library. The C API
/// maps `code()` one-to-one onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sortedrl
