// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "headgen/decode.hpp"
#include "headgen/model.hpp"
#include "headgen/tokenizer.hpp"

namespace headgen {

enum class DecodeAlgo { kGreedy, kSample, kBeam, kDbs };

DecodeAlgo ParseDecodeAlgo(std::string_view name);
const char* DecodeAlgoName(DecodeAlgo algo);

/// Clipped body followed by `<special1>`.
TokenSeq HeadlinePrompt(std::span<const TokenId> body_ids, const Vocab& vocab);

struct GeneratedHeadline {
  TokenSeq ids;  // without the end token
  std::string text;
  double score = 0.0;
};

/// One headline for greedy, sampling and beam search; one per group (the
/// group leader) for diverse beam search. Generation length is capped so
/// prompt plus headline fit the model context.
std::vector<GeneratedHeadline> GenerateHeadlines(ModelScorer& scorer, const Vocab& vocab,
                                                 std::string_view body,
                                                 const DecodeConfig& config,
                                                 DecodeAlgo algo = DecodeAlgo::kDbs);

struct HeadlineExample {
  std::string body;
  std::string headline;
};

/// Mean over articles of the set BLEU between the DBS output and the true
/// headline, on token ids.
double MeanSetBleu(ModelScorer& scorer, const Vocab& vocab,
                   std::span<const HeadlineExample> examples, const DecodeConfig& config);

}  // namespace headgen
