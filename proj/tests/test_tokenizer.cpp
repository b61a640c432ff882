// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/tokenizer.hpp"
#include "headgen/utf8.hpp"

namespace headgen {
namespace {

std::vector<std::string> g_warnings;
void Capture(const std::string& w) { g_warnings.push_back(w); }

// Straightforward BPE: recount every pair from scratch each round.
std::vector<std::pair<std::string, std::string>> NaiveMerges(
    const std::vector<std::string>& docs, std::size_t max_merges) {
  std::vector<std::vector<std::string>> seqs;
  for (const std::string& d : docs) {
    std::vector<std::string> s;
    for (char c : d) s.emplace_back(1, c);
    seqs.push_back(s);
  }
  std::vector<std::pair<std::string, std::string>> merges;
  while (merges.size() < max_merges) {
    std::map<std::pair<std::string, std::string>, int> counts;
    for (const auto& s : seqs) {
      for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[{s[i], s[i + 1]}];
    }
    // std::map orders by (left, right) expansion, so the first maximum wins.
    std::pair<std::string, std::string> best;
    int best_count = 1;
    for (const auto& [pair, count] : counts) {
      if (count > best_count) {
        best = pair;
        best_count = count;
      }
    }
    if (best_count < 2) break;
    merges.push_back(best);
    for (auto& s : seqs) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
          next.push_back(s[i] + s[i + 1]);
          i += 2;
        } else {
          next.push_back(s[i++]);
        }
      }
      s = std::move(next);
    }
  }
  return merges;
}

std::string RandomUtf8(std::mt19937_64& rng, std::size_t n_chars) {
  std::string out;
  for (std::size_t i = 0; i < n_chars; ++i) {
    const std::uint64_t kind = UniformBelow(rng, 10);
    char32_t cp;
    if (kind < 5) {
      cp = static_cast<char32_t>(0x20 + UniformBelow(rng, 0x5F));
    } else if (kind < 7) {
      cp = static_cast<char32_t>(0xA0 + UniformBelow(rng, 0x700));
    } else if (kind < 9) {
      do {
        cp = static_cast<char32_t>(0x800 + UniformBelow(rng, 0xF800));
      } while (cp >= 0xD800 && cp <= 0xDFFF);
    } else {
      cp = static_cast<char32_t>(0x10000 + UniformBelow(rng, 0x100000));
    }
    utf8::AppendCodePoint(cp, &out);
  }
  return out;
}

Vocab SmallVocab() {
  const std::vector<std::string> docs = {
      "Sauli Niinist\xC3\xB6 tapasi presidentin", "the cat sat on the mat",
      "Niinist\xC3\xB6 said that the talks went well", "abab abab abab"};
  return Vocab::Learn(docs, 320);
}

TEST(Tokenizer, FreshVocabHasBytesAndSpecials) {
  const Vocab v;
  EXPECT_EQ(v.size(), Vocab::kMinSize);
  EXPECT_EQ(v.SpecialId("<sos>"), 256);
  EXPECT_EQ(v.eos(), 257);
  EXPECT_EQ(v.SpecialId("<special3>"), 261);
}

TEST(Tokenizer, FirstMergeIsMostFrequentPair) {
  const std::vector<std::string> docs = {"abab abab"};
  const Vocab v = Vocab::Learn(docs, 265);
  ASSERT_GE(v.merge_count(), 1u);
  EXPECT_EQ(v.merges()[0], (std::pair<TokenId, TokenId>{'a', 'b'}));
  const auto oracle = NaiveMerges(docs, 3);
  ASSERT_EQ(oracle.size(), v.merge_count());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    EXPECT_EQ(v.TokenBytes(v.merges()[i].first), oracle[i].first);
    EXPECT_EQ(v.TokenBytes(v.merges()[i].second), oracle[i].second);
  }
}

TEST(Tokenizer, TargetBelowMinimumIsRejected) {
  const std::vector<std::string> docs = {"abab abab"};
  EXPECT_THROW(Vocab::Learn(docs, 259), Error);
}

TEST(Tokenizer, SingleByteCorpusHaltsWhenNoPairRepeats) {
  const std::vector<std::string> docs = {"aaaaaaa"};
  const Vocab v = Vocab::Learn(docs, 400);
  // aa (6 pairs), then aa+aa (2 pairs); afterwards every pair is unique.
  ASSERT_EQ(v.merge_count(), 2u);
  EXPECT_EQ(v.TokenBytes(v.merges()[0].first), "a");
  EXPECT_EQ(v.TokenBytes(static_cast<TokenId>(Vocab::kByteTokens + 1)), "aaaa");
  for (const auto& [l, r] : v.merges()) {
    EXPECT_EQ(v.TokenBytes(l).find_first_not_of('a'), std::string::npos);
    EXPECT_EQ(v.TokenBytes(r).find_first_not_of('a'), std::string::npos);
  }
}

TEST(Tokenizer, LearnMatchesNaiveOracle) {
  std::mt19937_64 rng(21);
  const std::string alphabet = "ab c";
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> docs(1 + UniformBelow(rng, 4));
    for (auto& d : docs) {
      const std::size_t n = UniformBelow(rng, 30);
      for (std::size_t i = 0; i < n; ++i) d += alphabet[UniformBelow(rng, alphabet.size())];
    }
    bool any = false;
    for (const auto& d : docs) any = any || !d.empty();
    if (!any) continue;
    const Vocab v = Vocab::Learn(docs, Vocab::kMinSize + 12);
    std::vector<std::string> nonempty;
    for (const auto& d : docs) {
      if (!d.empty()) nonempty.push_back(d);
    }
    const auto oracle = NaiveMerges(nonempty, 12);
    ASSERT_EQ(v.merge_count(), oracle.size()) << "trial " << trial;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_EQ(v.TokenBytes(v.merges()[i].first) + "|" + v.TokenBytes(v.merges()[i].second),
                oracle[i].first + "|" + oracle[i].second)
          << "trial " << trial << " merge " << i;
    }
  }
}

TEST(Tokenizer, EmptyTextEncodesToNothing) {
  EXPECT_TRUE(SmallVocab().Encode("").empty());
}

TEST(Tokenizer, SpecialLiteralStaysOrdinaryBytes) {
  const Vocab v = SmallVocab();
  const TokenSeq ids = v.Encode("x <special1> y");
  for (TokenId id : ids) {
    EXPECT_FALSE(v.IsSpecial(id));
    EXPECT_NE(id, v.SpecialId("<special1>"));
  }
  EXPECT_EQ(v.Decode(ids), "x <special1> y");
}

TEST(Tokenizer, RoundTripsName) {
  const Vocab v = SmallVocab();
  const std::string s = "Sauli Niinist\xC3\xB6";
  EXPECT_EQ(v.Decode(v.Encode(s)), s);
  EXPECT_LT(v.Encode(s).size(), s.size());
}

TEST(Tokenizer, EosRendersAsItsName) {
  const Vocab v = SmallVocab();
  const TokenSeq ids = {v.eos()};
  EXPECT_EQ(v.Decode(ids), "<eos>");
}

TEST(Tokenizer, TruncatedMultibyteDecodesToReplacementWithWarning) {
  const Vocab v;
  const TokenSeq full = v.Encode("\xC3\xB6");
  ASSERT_EQ(full.size(), 2u);
  const TokenSeq cut = {'x', full[0]};
  g_warnings.clear();
  const WarningSink old = SetWarningSink(&Capture);
  const std::string text = v.Decode(cut);
  SetWarningSink(old);
  EXPECT_EQ(text, "x\xEF\xBF\xBD");
  EXPECT_EQ(g_warnings.size(), 1u);
  EXPECT_EQ(v.DecodeChecked(cut).replacements, 1u);
}

TEST(Tokenizer, UnknownSpecialIsAnError) {
  const Vocab v;
  EXPECT_EQ(v.SpecialId("<eos>"), v.eos());
  try {
    v.SpecialId("<special9>");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(Tokenizer, OutOfRangeIdIsAnError) {
  const Vocab v;
  const TokenSeq bad = {static_cast<TokenId>(v.size())};
  EXPECT_THROW(v.Decode(bad), Error);
}

TEST(Tokenizer, SaveLoadKeepsIds) {
  const Vocab v = SmallVocab();
  const auto path = std::filesystem::temp_directory_path() / "headgen_vocab_test.txt";
  v.Save(path);
  const Vocab back = Vocab::Load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.size(), v.size());
  EXPECT_EQ(back.ToText(), v.ToText());
  EXPECT_EQ(back.Hash(), v.Hash());
  for (const auto name : Vocab::kSpecialNames) {
    EXPECT_EQ(back.SpecialId(name), v.SpecialId(name));
  }
  const std::string s = "Niinist\xC3\xB6 tapasi";
  EXPECT_EQ(back.Encode(s), v.Encode(s));
}

TEST(Tokenizer, CorruptFilesAreFormatErrors) {
  EXPECT_THROW(Vocab::FromText("nonsense"), Error);
  std::string text = SmallVocab().ToText();
  text.resize(text.size() / 2);
  EXPECT_THROW(Vocab::FromText(text), Error);
}

TEST(Tokenizer, LearningIsDeterministic) {
  const std::vector<std::string> docs = {"one two three two one", "three three two",
                                         "one one one"};
  EXPECT_EQ(Vocab::Learn(docs, 300).ToText(), Vocab::Learn(docs, 300).ToText());
}

TEST(Tokenizer, RandomUtf8RoundTripsAndNeverGrows) {
  std::mt19937_64 rng(99);
  std::vector<std::string> training;
  for (int i = 0; i < 40; ++i) training.push_back(RandomUtf8(rng, 40));
  const Vocab v = Vocab::Learn(training, 600);
  for (int i = 0; i < 1000; ++i) {
    const std::string s = RandomUtf8(rng, UniformBelow(rng, 60));
    const TokenSeq ids = v.Encode(s);
    EXPECT_LE(ids.size(), s.size());
    ASSERT_EQ(v.Decode(ids), s);
  }
}

TEST(Tokenizer, EncodeIsTotalOverBytes) {
  const Vocab v = SmallVocab();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    std::string s(UniformBelow(rng, 40), '\0');
    for (char& c : s) c = static_cast<char>(UniformBelow(rng, 256));
    const TokenSeq ids = v.Encode(s);
    EXPECT_LE(ids.size(), s.size());
    std::string bytes;
    for (TokenId id : ids) bytes += v.TokenBytes(id);
    EXPECT_EQ(bytes, s);
  }
}

}  // namespace
}  // namespace headgen
