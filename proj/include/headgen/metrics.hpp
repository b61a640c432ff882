// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/scorer.hpp"

namespace headgen {

struct PerplexityReport {
  double ppl = 1.0;
  std::size_t token_count = 0;
  double mean_nll = 0.0;
};

/// Exponentiated mean negative log-likelihood. Each document is scored
/// independently, conditioned on a leading `sos` (prepended when absent).
PerplexityReport Perplexity(Scorer& scorer, std::span<const TokenSeq> docs,
                            TokenId sos);

/// Same definition, from an already accumulated NLL sum.
PerplexityReport PerplexityFromNll(double nll_sum, std::size_t tokens);

struct BleuScore {
  double value = 0.0;      // with add-one smoothing of zero precisions
  double raw_value = 0.0;  // unsmoothed; 0 whenever any precision is 0
  std::vector<double> precisions;
  double brevity_penalty = 1.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
};

BleuScore SentenceBleu(std::span<const TokenId> hypothesis,
                       std::span<const TokenId> reference, int max_n = 4);

/// Whitespace-word variant, mostly for debugging.
BleuScore SentenceBleuWords(std::string_view hypothesis,
                            std::string_view reference, int max_n = 4);

/// Best sentence BLEU over the candidate set.
double HeadlineSetBleu(std::span<const TokenSeq> candidates,
                       std::span<const TokenId> reference);

}  // namespace headgen
