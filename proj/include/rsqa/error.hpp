// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rsqa {

enum class ErrorKind {
  kIo,           // file could not be opened, read or written
  kFormat,       // malformed container or CSV
  kUnsupported,  // well-formed input outside the supported feature set
  kValidation,   // value out of its documented range
  kShape,        // tensor or signal dimensions disagree
  kContract,     // precondition of an operation violated
  kDivergence,   // training produced a non-finite loss
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rsqa
