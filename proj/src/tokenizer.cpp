// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "headgen/utf8.hpp"

namespace headgen {
namespace {

constexpr std::string_view kMagic = "headgen-bpe";
constexpr int kFormatVersion = 1;

std::uint64_t PairKey(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

TokenId PairLeft(std::uint64_t key) { return static_cast<TokenId>(key >> 32); }
TokenId PairRight(std::uint64_t key) {
  return static_cast<TokenId>(key & 0xffffffffu);
}

// Working state for learning: distinct documents with multiplicities.
struct LearnState {
  std::vector<std::vector<TokenId>> seqs;
  std::vector<std::int64_t> weight;
  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;

  void AddPairs(std::uint32_t doc, std::int64_t sign) {
    const auto& s = seqs[doc];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const std::uint64_t key = PairKey(s[i], s[i + 1]);
      auto it = counts.find(key);
      if (sign > 0) {
        if (it == counts.end()) it = counts.emplace(key, 0).first;
        it->second += weight[doc];
        where[key].push_back(doc);
      } else {
        it->second -= weight[doc];
        if (it->second == 0) counts.erase(it);
      }
    }
  }
};

}  // namespace

Vocab::Vocab() {
  expansions_.reserve(kByteTokens);
  for (std::size_t b = 0; b < kByteTokens; ++b) {
    expansions_.emplace_back(1, static_cast<char>(b));
  }
}

void Vocab::AddMerge(TokenId left, TokenId right) {
  const TokenId id = static_cast<TokenId>(expansions_.size());
  merges_.emplace_back(left, right);
  expansions_.push_back(expansions_[left] + expansions_[right]);
  merge_ids_.emplace(PairKey(left, right), id);
}

Vocab Vocab::Learn(std::span<const std::string> documents,
                   std::size_t target_size) {
  if (target_size < kMinSize) {
    Fail(ErrorKind::kInvalidArgument,
         "target vocabulary size must be at least " + std::to_string(kMinSize));
  }
  if (target_size > static_cast<std::size_t>(std::numeric_limits<TokenId>::max())) {
    Fail(ErrorKind::kInvalidArgument, "target vocabulary size too large");
  }

  std::map<std::string_view, std::int64_t> distinct;
  for (const std::string& d : documents) {
    if (!d.empty()) ++distinct[d];
  }
  if (distinct.empty()) Fail(ErrorKind::kInvalidArgument, "corpus is empty");

  Vocab vocab;
  LearnState st;
  for (const auto& [text, n] : distinct) {
    std::vector<TokenId> s(text.size());
    std::transform(text.begin(), text.end(), s.begin(), [](char c) {
      return static_cast<TokenId>(static_cast<unsigned char>(c));
    });
    st.seqs.push_back(std::move(s));
    st.weight.push_back(n);
  }
  for (std::uint32_t d = 0; d < st.seqs.size(); ++d) st.AddPairs(d, +1);

  const std::size_t max_merges = target_size - kMinSize;
  while (vocab.merges_.size() < max_merges) {
    std::uint64_t best = 0;
    std::int64_t best_count = 1;
    for (const auto& [key, count] : st.counts) {
      if (count < best_count) continue;
      if (count > best_count) {
        best = key;
        best_count = count;
        continue;
      }
      const auto& el = vocab.expansions_[PairLeft(key)];
      const auto& bl = vocab.expansions_[PairLeft(best)];
      if (el < bl || (el == bl && vocab.expansions_[PairRight(key)] <
                                      vocab.expansions_[PairRight(best)])) {
        best = key;
      }
    }
    if (best_count < 2) break;

    const TokenId left = PairLeft(best);
    const TokenId right = PairRight(best);
    const TokenId merged = static_cast<TokenId>(vocab.expansions_.size());
    vocab.AddMerge(left, right);

    std::vector<std::uint32_t> docs = std::move(st.where[best]);
    st.where.erase(best);
    std::sort(docs.begin(), docs.end());
    docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    for (std::uint32_t d : docs) {
      auto& s = st.seqs[d];
      bool present = false;
      for (std::size_t i = 0; i + 1 < s.size() && !present; ++i) {
        present = s[i] == left && s[i + 1] == right;
      }
      if (!present) continue;
      st.AddPairs(d, -1);
      std::size_t w = 0;
      for (std::size_t r = 0; r < s.size();) {
        if (r + 1 < s.size() && s[r] == left && s[r + 1] == right) {
          s[w++] = merged;
          r += 2;
        } else {
          s[w++] = s[r++];
        }
      }
      s.resize(w);
      st.AddPairs(d, +1);
    }
  }
  return vocab;
}

TokenSeq Vocab::Encode(std::string_view text) const {
  TokenSeq ids(text.size());
  std::transform(text.begin(), text.end(), ids.begin(), [](char c) {
    return static_cast<TokenId>(static_cast<unsigned char>(c));
  });
  // A merge's product only takes part in later merges, so repeatedly
  // applying the earliest-learned applicable merge equals applying the merge
  // list in order.
  while (ids.size() >= 2) {
    TokenId best = std::numeric_limits<TokenId>::max();
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const auto it = merge_ids_.find(PairKey(ids[i], ids[i + 1]));
      if (it != merge_ids_.end() && it->second < best) best = it->second;
    }
    if (best == std::numeric_limits<TokenId>::max()) break;
    const auto [left, right] = merges_[best - kByteTokens];
    std::size_t w = 0;
    for (std::size_t r = 0; r < ids.size();) {
      if (r + 1 < ids.size() && ids[r] == left && ids[r + 1] == right) {
        ids[w++] = best;
        r += 2;
      } else {
        ids[w++] = ids[r++];
      }
    }
    ids.resize(w);
  }
  return ids;
}

Vocab::Decoded Vocab::DecodeChecked(std::span<const TokenId> ids) const {
  std::string bytes;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= size()) {
      Fail(ErrorKind::kInvalidArgument,
           "token id " + std::to_string(id) + " out of range");
    }
    if (IsSpecial(id)) {
      bytes.append(kSpecialNames[id - expansions_.size()]);
    } else {
      bytes.append(expansions_[id]);
    }
  }
  Decoded out;
  out.replacements = utf8::Sanitize(bytes, &out.text);
  return out;
}

std::string Vocab::Decode(std::span<const TokenId> ids) const {
  Decoded d = DecodeChecked(ids);
  if (d.replacements > 0) {
    Warn("decoded bytes are not valid UTF-8; " +
         std::to_string(d.replacements) + " replacement(s) made");
  }
  return std::move(d.text);
}

TokenId Vocab::SpecialId(std::string_view name) const {
  for (std::size_t i = 0; i < kSpecialNames.size(); ++i) {
    if (kSpecialNames[i] == name) {
      return static_cast<TokenId>(expansions_.size() + i);
    }
  }
  Fail(ErrorKind::kInvalidArgument,
       "unknown special token '" + std::string(name) + "'");
}

bool Vocab::IsSpecial(TokenId id) const {
  return id >= static_cast<TokenId>(expansions_.size()) &&
         static_cast<std::size_t>(id) < size();
}

const std::string& Vocab::TokenBytes(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= expansions_.size()) {
    Fail(ErrorKind::kInvalidArgument,
         "token id " + std::to_string(id) + " has no byte expansion");
  }
  return expansions_[id];
}

std::string Vocab::ToText() const {
  std::ostringstream out;
  out << kMagic << ' ' << kFormatVersion << " V=" << size()
      << " merges=" << merges_.size() << '\n';
  for (const auto& [a, b] : merges_) out << a << ' ' << b << '\n';
  for (std::size_t i = 0; i < kSpecialNames.size(); ++i) {
    out << "special " << kSpecialNames[i] << ' ' << expansions_.size() + i
        << '\n';
  }
  return out.str();
}

Vocab Vocab::FromText(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, vfield, mfield;
  int version = 0;
  if (!(in >> magic >> version >> vfield >> mfield) || magic != kMagic) {
    Fail(ErrorKind::kFormat, "not a vocab file");
  }
  if (version != kFormatVersion) {
    Fail(ErrorKind::kFormat,
         "unsupported vocab version " + std::to_string(version));
  }
  std::size_t v = 0, m = 0;
  try {
    if (vfield.rfind("V=", 0) != 0 || mfield.rfind("merges=", 0) != 0) {
      throw std::invalid_argument("header");
    }
    v = std::stoull(vfield.substr(2));
    m = std::stoull(mfield.substr(7));
  } catch (const std::exception&) {
    Fail(ErrorKind::kFormat, "malformed vocab header");
  }
  Vocab vocab;
  for (std::size_t i = 0; i < m; ++i) {
    long long a = -1, b = -1;
    if (!(in >> a >> b)) Fail(ErrorKind::kFormat, "truncated merge list");
    const long long limit = static_cast<long long>(vocab.expansions_.size());
    if (a < 0 || b < 0 || a >= limit || b >= limit) {
      Fail(ErrorKind::kFormat, "merge rule " + std::to_string(i) +
                                   " references an unknown token");
    }
    vocab.AddMerge(static_cast<TokenId>(a), static_cast<TokenId>(b));
  }
  for (std::size_t i = 0; i < kSpecialNames.size(); ++i) {
    std::string tag, name;
    std::size_t id = 0;
    if (!(in >> tag >> name >> id) || tag != "special") {
      Fail(ErrorKind::kFormat, "truncated special table");
    }
    if (name != kSpecialNames[i] || id != vocab.expansions_.size() + i) {
      Fail(ErrorKind::kFormat, "special table does not match layout");
    }
  }
  if (vocab.size() != v) Fail(ErrorKind::kFormat, "vocab size mismatch");
  return vocab;
}

Vocab Vocab::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open vocab " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromText(ss.str());
}

void Vocab::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write vocab " + path.string());
  out << ToText();
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::uint64_t Vocab::Hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : ToText()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace headgen
