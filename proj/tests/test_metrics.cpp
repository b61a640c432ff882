// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "headgen/metrics.hpp"
#include "toy_scorers.hpp"

namespace headgen {
namespace {

using testing::HashScorer;
using testing::PerfectScorer;
using testing::TableScorer;
using testing::UniformScorer;

// Clipped n-gram precision BLEU with add-one smoothing on zero precisions,
// written out directly from the definition.
double OracleBleu(const TokenSeq& hyp, const TokenSeq& ref, bool smooth = true) {
  if (hyp.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<TokenSeq, int> rc, hc;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) ++rc[TokenSeq(ref.begin() + i, ref.begin() + i + n)];
    int total = 0, match = 0;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hc[TokenSeq(hyp.begin() + i, hyp.begin() + i + n)];
      ++total;
    }
    for (const auto& [g, c] : hc) match += std::min(c, rc.count(g) ? rc[g] : 0);
    double p;
    if (match > 0) {
      p = static_cast<double>(match) / total;
    } else if (smooth) {
      p = 1.0 / (total + 1.0);
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(hyp.size()), r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / 4.0);
}

TEST(PerplexityTest, UniformScorerGivesVocabSize) {
  for (std::size_t v : {2u, 7u, 1024u}) {
    UniformScorer s(v);
    const std::vector<TokenSeq> docs = {{0, 1, 1, 0}, {0, 1}, {1, 1, 1, 0, 1}};
    const auto r = Perplexity(s, docs, 0);
    EXPECT_NEAR(r.ppl, static_cast<double>(v), 1e-6 * static_cast<double>(v));
    // sos is prepended to the third document only.
    EXPECT_EQ(r.token_count, 3u + 1u + 5u);
  }
}

TEST(PerplexityTest, PerfectScorerGivesOne) {
  const std::vector<TokenSeq> docs = {{0, 3, 4, 2, 5, 1, 1}};
  PerfectScorer s(6, docs);
  const auto r = Perplexity(s, docs, 0);
  EXPECT_NEAR(r.ppl, 1.0, 1e-9);
  EXPECT_EQ(r.mean_nll, 0.0);
}

TEST(PerplexityTest, ThreeTokenProductFormula) {
  // After sos the scorer assigns 0.5, 0.25 and 0.8 to the true tokens.
  TableScorer s(4, 1, std::vector<double>(4, std::log(0.25)));
  s.Set({}, {std::log(0.5), std::log(0.5), -30.0, -30.0});
  s.Set({1}, {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25)});
  s.Set({1, 2}, {std::log(0.1), std::log(0.05), std::log(0.05), std::log(0.8)});
  const std::vector<TokenSeq> docs = {{1, 2, 3}};
  const auto r = Perplexity(s, docs, 0);
  EXPECT_EQ(r.token_count, 3u);
  EXPECT_NEAR(r.ppl, std::pow(0.5 * 0.25 * 0.8, -1.0 / 3.0), 1e-9);
}

TEST(PerplexityTest, ExpOfMeanNllAndAtLeastOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    HashScorer s(13, seed);
    std::mt19937_64 rng(seed);
    std::vector<TokenSeq> docs(3);
    for (auto& d : docs) {
      d.resize(2 + UniformBelow(rng, 10));
      for (auto& t : d) t = static_cast<TokenId>(UniformBelow(rng, 13));
    }
    const auto r = Perplexity(s, docs, 12);
    EXPECT_DOUBLE_EQ(r.ppl, std::exp(r.mean_nll));
    EXPECT_GE(r.ppl, 1.0);
  }
}

TEST(PerplexityTest, EmptyStreamIsAnError) {
  UniformScorer s(3);
  const std::vector<TokenSeq> docs = {{}, {0}};
  EXPECT_THROW(Perplexity(s, docs, 0), Error);
  EXPECT_THROW(PerplexityFromNll(1.0, 0), Error);
}

TEST(Bleu, IdenticalIsOne) {
  const TokenSeq a = {4, 8, 15, 16, 23, 42};
  EXPECT_DOUBLE_EQ(SentenceBleu(a, a).value, 1.0);
  EXPECT_DOUBLE_EQ(SentenceBleu(a, a).raw_value, 1.0);
}

TEST(Bleu, DisjointIsZeroBeforeSmoothing) {
  const TokenSeq a = {1, 2, 3, 4}, b = {5, 6, 7, 8};
  const auto s = SentenceBleu(a, b);
  EXPECT_EQ(s.raw_value, 0.0);
  // Stored precisions are smoothed: 1 / (4 + 1).
  EXPECT_DOUBLE_EQ(s.precisions[0], 0.2);
  EXPECT_GT(s.value, 0.0);
  EXPECT_LT(s.value, 0.5);
}

TEST(Bleu, ClippedCountsHandExample) {
  const auto s = SentenceBleuWords("the the the cat", "the cat sat");
  // Unigrams 2/4, bigrams 1/3, trigrams 0/2 and 4-grams 0/1 smoothed to 1/3
  // and 1/2; the hypothesis is longer so there is no brevity penalty.
  EXPECT_DOUBLE_EQ(s.precisions[0], 0.5);
  EXPECT_NEAR(s.precisions[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(s.brevity_penalty, 1.0);
  EXPECT_EQ(s.raw_value, 0.0);
  EXPECT_NEAR(s.value, std::pow(1.0 / 36.0, 0.25), 1e-12);
  EXPECT_NEAR(s.value, 0.408248, 1e-6);
  const TokenSeq hyp = {1, 1, 1, 2}, ref = {1, 2, 3};
  EXPECT_NEAR(SentenceBleu(hyp, ref).value, OracleBleu(hyp, ref), 1e-12);
}

TEST(Bleu, MatchesOracleOnRandomPairs) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    TokenSeq hyp(UniformBelow(rng, 12)), ref(1 + UniformBelow(rng, 12));
    for (auto& t : hyp) t = static_cast<TokenId>(UniformBelow(rng, 4));
    for (auto& t : ref) t = static_cast<TokenId>(UniformBelow(rng, 4));
    const auto s = SentenceBleu(hyp, ref);
    EXPECT_NEAR(s.value, OracleBleu(hyp, ref), 1e-12);
    EXPECT_NEAR(s.raw_value, OracleBleu(hyp, ref, false), 1e-12);
  }
}

TEST(Bleu, ShortHypothesisPaysBrevityPenalty) {
  const TokenSeq ref = {1, 2, 3, 4, 5, 6, 7, 8};
  const TokenSeq hyp = {1, 2, 3, 4};
  const auto s = SentenceBleu(hyp, ref);
  EXPECT_NEAR(s.brevity_penalty, std::exp(1.0 - 2.0), 1e-15);
}

TEST(SetBleu, ContainingTruthIsOne) {
  const TokenSeq ref = {5, 6, 7, 8, 9};
  const std::vector<TokenSeq> set = {{1, 2}, {5, 6, 7}, ref, {9}};
  EXPECT_DOUBLE_EQ(HeadlineSetBleu(set, ref), 1.0);
}

TEST(SetBleu, IdenticalCandidatesEqualSentenceScore) {
  const TokenSeq ref = {5, 6, 7, 8, 9};
  const TokenSeq c = {5, 6, 1, 8, 9};
  const std::vector<TokenSeq> set(4, c);
  EXPECT_DOUBLE_EQ(HeadlineSetBleu(set, ref), SentenceBleu(c, ref).value);
}

TEST(SetBleu, FixtureIsMaxOfOracleScores) {
  const TokenSeq ref = {1, 2, 3, 4, 5, 6};
  const std::vector<TokenSeq> set = {{1, 2, 3, 9}, {2, 3, 4, 5, 6}, {6, 5, 4}, {1, 2, 7, 4, 5, 6}};
  double best = 0.0;
  for (const auto& c : set) best = std::max(best, OracleBleu(c, ref));
  EXPECT_NEAR(HeadlineSetBleu(set, ref), best, 1e-12);
}

TEST(SetBleu, PermutationInvariantAndMonotone) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    TokenSeq ref(1 + UniformBelow(rng, 8));
    for (auto& t : ref) t = static_cast<TokenId>(UniformBelow(rng, 5));
    std::vector<TokenSeq> set(1 + UniformBelow(rng, 4));
    for (auto& c : set) {
      c.resize(1 + UniformBelow(rng, 8));
      for (auto& t : c) t = static_cast<TokenId>(UniformBelow(rng, 5));
    }
    const double base = HeadlineSetBleu(set, ref);
    std::vector<TokenSeq> shuffled = set;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(HeadlineSetBleu(shuffled, ref), base);
    TokenSeq extra(1 + UniformBelow(rng, 8));
    for (auto& t : extra) t = static_cast<TokenId>(UniformBelow(rng, 5));
    set.push_back(extra);
    EXPECT_GE(HeadlineSetBleu(set, ref), base);
  }
}

}  // namespace
}  // namespace headgen
