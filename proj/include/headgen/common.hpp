// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace headgen {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kFormat,
  kNumeric,
  kState,
};

// Every failure inside the library surfaces as this exception; the C API
// translates the kind into a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Unbiased draw from [0, n) by rejection; n must be positive.
std::uint64_t UniformBelow(std::mt19937_64& rng, std::uint64_t n);

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

// Warnings go to stderr unless a test swaps the sink out.
void Warn(const std::string& message);
using WarningSink = void (*)(const std::string&);
WarningSink SetWarningSink(WarningSink sink);

}  // namespace headgen
