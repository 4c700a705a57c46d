// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hamwave {

/// Error categories; mirrored one-to-one by the hw_status codes of the C API.
enum class ErrorKind {
  invalid_argument,  ///< bad sizes, shapes, ranges, config values
  io,                ///< file read/write/parse failures
  numeric,           ///< non-finite values, failed factorizations, diverged runs
  mismatch,          ///< incompatible artifacts (grid of checkpoint vs dataset, ...)
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

[[noreturn]] inline void fail_invalid(const std::string& msg) { fail(ErrorKind::invalid_argument, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { fail(ErrorKind::io, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { fail(ErrorKind::numeric, msg); }
[[noreturn]] inline void fail_mismatch(const std::string& msg) { fail(ErrorKind::mismatch, msg); }

}  // namespace hamwave
