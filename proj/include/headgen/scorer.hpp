// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "headgen/common.hpp"

namespace headgen {

/// Next-token log-probability oracle. Decoding and perplexity only see the
/// model through this interface, so toy scorers can stand in for tests.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::size_t vocab_size() const = 0;

  /// Log-probabilities (length vocab_size) of the token following `prefix`.
  virtual std::vector<double> NextLogProbs(std::span<const TokenId> prefix) = 0;

  /// log p(seq[t] | seq[0..t)) for t = 1..n-1. The default walks prefixes;
  /// scorers with a batched forward pass override it.
  virtual std::vector<double> TargetLogProbs(std::span<const TokenId> seq);
};

}  // namespace headgen
