// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

namespace headgen {

std::vector<double> Scorer::TargetLogProbs(std::span<const TokenId> seq) {
  std::vector<double> out;
  if (seq.size() < 2) return out;
  out.reserve(seq.size() - 1);
  for (std::size_t t = 1; t < seq.size(); ++t) {
    const std::vector<double> row = NextLogProbs(seq.first(t));
    out.push_back(row.at(static_cast<std::size_t>(seq[t])));
  }
  return out;
}

PerplexityReport PerplexityFromNll(double nll_sum, std::size_t tokens) {
  if (tokens == 0) Fail(ErrorKind::kInvalidArgument, "no tokens to score");
  PerplexityReport r;
  r.token_count = tokens;
  r.mean_nll = nll_sum / static_cast<double>(tokens);
  r.ppl = std::exp(r.mean_nll);
  return r;
}

PerplexityReport Perplexity(Scorer& scorer, std::span<const TokenSeq> docs,
                            TokenId sos) {
  double nll = 0.0;
  std::size_t tokens = 0;
  TokenSeq seq;
  for (const TokenSeq& doc : docs) {
    if (doc.empty() || (doc.size() == 1 && doc[0] == sos)) continue;
    seq.clear();
    if (doc.front() != sos) seq.push_back(sos);
    seq.insert(seq.end(), doc.begin(), doc.end());
    for (double lp : scorer.TargetLogProbs(seq)) {
      nll -= lp;
      ++tokens;
    }
  }
  if (tokens == 0) Fail(ErrorKind::kInvalidArgument, "empty token stream");
  return PerplexityFromNll(nll, tokens);
}

namespace {

template <typename Tok>
BleuScore BleuImpl(std::span<const Tok> hyp, std::span<const Tok> ref,
                   int max_n) {
  if (max_n < 1) Fail(ErrorKind::kInvalidArgument, "max_n must be >= 1");
  if (ref.empty()) Fail(ErrorKind::kInvalidArgument, "empty BLEU reference");
  BleuScore s;
  s.hypothesis_length = hyp.size();
  s.reference_length = ref.size();
  s.precisions.assign(static_cast<std::size_t>(max_n), 0.0);
  if (hyp.empty()) {
    s.brevity_penalty = 0.0;
    return s;
  }

  double log_sum = 0.0;
  double raw_log_sum = 0.0;
  bool raw_zero = false;
  for (int n = 1; n <= max_n; ++n) {
    std::map<std::vector<Tok>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<Tok>(ref.begin() + i, ref.begin() + i + n)];
    }
    std::map<std::vector<Tok>, std::size_t> hyp_counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<Tok>(hyp.begin() + i, hyp.begin() + i + n)];
      ++total;
    }
    std::size_t matched = 0;
    for (const auto& [gram, count] : hyp_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (matched == 0) {
      p = 1.0 / static_cast<double>(total + 1);
      raw_zero = true;
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
      raw_log_sum += std::log(p);
    }
    s.precisions[n - 1] = p;
    log_sum += std::log(p);
  }
  const double h = static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  s.brevity_penalty = h < r ? std::exp(1.0 - r / h) : 1.0;
  s.value = s.brevity_penalty * std::exp(log_sum / max_n);
  s.raw_value =
      raw_zero ? 0.0 : s.brevity_penalty * std::exp(raw_log_sum / max_n);
  return s;
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

}  // namespace

BleuScore SentenceBleu(std::span<const TokenId> hypothesis,
                       std::span<const TokenId> reference, int max_n) {
  return BleuImpl<TokenId>(hypothesis, reference, max_n);
}

BleuScore SentenceBleuWords(std::string_view hypothesis,
                            std::string_view reference, int max_n) {
  const auto hyp = SplitWords(hypothesis);
  const auto ref = SplitWords(reference);
  return BleuImpl<std::string>(hyp, ref, max_n);
}

double HeadlineSetBleu(std::span<const TokenSeq> candidates,
                       std::span<const TokenId> reference) {
  if (candidates.empty()) {
    Fail(ErrorKind::kInvalidArgument, "empty headline set");
  }
  double best = 0.0;
  for (const TokenSeq& c : candidates) {
    best = std::max(best, SentenceBleu(c, reference).value);
  }
  return best;
}

}  // namespace headgen
