// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "headgen/common.hpp"

namespace headgen {

/// Byte-level BPE vocabulary.
///
/// Ids 0..255 are raw bytes, the next |merges| ids are merge products in the
/// order they were learned, and the six reserved specials take the highest
/// ids. Plain-text encoding can therefore never produce a special id.
class Vocab {
 public:
  static constexpr std::array<std::string_view, 6> kSpecialNames = {
      "<sos>", "<eos>", "<unk>", "<special1>", "<special2>", "<special3>"};
  static constexpr std::size_t kByteTokens = 256;
  static constexpr std::size_t kMinSize = kByteTokens + kSpecialNames.size();
  static constexpr std::size_t kFullScaleTargetSize = 50000;
  static constexpr std::size_t kDeskTargetSize = 1024;

  Vocab();  // bytes + specials, no merges

  /// Greedy BPE: repeatedly merges the most frequent adjacent pair until the
  /// vocabulary reaches `target_size` (specials included) or no pair occurs
  /// at least twice. Ties go to the pair whose (left, right) byte expansions
  /// compare lexicographically smallest.
  static Vocab Learn(std::span<const std::string> documents,
                     std::size_t target_size);

  static Vocab FromText(std::string_view text);
  static Vocab Load(const std::filesystem::path& path);
  std::string ToText() const;
  void Save(const std::filesystem::path& path) const;

  std::size_t size() const { return expansions_.size() + kSpecialNames.size(); }
  std::size_t merge_count() const { return merges_.size(); }
  const std::vector<std::pair<TokenId, TokenId>>& merges() const {
    return merges_;
  }

  TokenSeq Encode(std::string_view text) const;

  struct Decoded {
    std::string text;
    std::size_t replacements = 0;
  };
  /// Concatenates byte expansions; specials render as their names. Invalid
  /// UTF-8 is replaced with U+FFFD and reported through `replacements`.
  Decoded DecodeChecked(std::span<const TokenId> ids) const;
  /// As DecodeChecked, emitting a warning when bytes had to be replaced.
  std::string Decode(std::span<const TokenId> ids) const;

  TokenId SpecialId(std::string_view name) const;
  bool IsSpecial(TokenId id) const;
  TokenId sos() const { return SpecialId("<sos>"); }
  TokenId eos() const { return SpecialId("<eos>"); }

  /// Raw bytes of a non-special token.
  const std::string& TokenBytes(TokenId id) const;

  /// FNV-1a over the serialized form; identifies the vocab in checkpoints.
  std::uint64_t Hash() const;

  bool operator==(const Vocab& other) const { return merges_ == other.merges_; }

 private:
  void AddMerge(TokenId left, TokenId right);

  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::vector<std::string> expansions_;
  std::unordered_map<std::uint64_t, TokenId> merge_ids_;
};

}  // namespace headgen
