// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/common.hpp"

#include <atomic>
#include <iostream>
#include <limits>

namespace headgen {
namespace {

void StderrSink(const std::string& message) {
  std::cerr << "warning: " << message << '\n';
}

std::atomic<WarningSink> g_sink{&StderrSink};

}  // namespace

void Warn(const std::string& message) { g_sink.load()(message); }

std::uint64_t UniformBelow(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "empty range");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

WarningSink SetWarningSink(WarningSink sink) {
  return g_sink.exchange(sink != nullptr ? sink : &StderrSink);
}

}  // namespace headgen
