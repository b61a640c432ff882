// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "headgen/corpus.hpp"
#include "headgen/decode.hpp"
#include "headgen/model.hpp"
#include "headgen/tokenizer.hpp"
#include "headgen/trainer.hpp"

namespace headgen {

struct CorpusSection {
  std::size_t articles = 640;
  SplitRatios split;
};

struct TokenizerSection {
  std::size_t target = Vocab::kDeskTargetSize;
};

struct TuneSection {
  int budget = 8;
  int n_init = 4;
  std::size_t articles = 8;  // taken from the validation split
};

/// Every stage's parameters. Sub-seeds are derived from `seed`, so they
/// are not part of the serialized form.
struct RunConfig {
  std::uint64_t seed = 7;
  CorpusSection corpus;
  TokenizerSection tokenizer;
  ModelConfig model;
  TrainConfig pretrain;
  TrainConfig finetune;
  DecodeConfig decode;
  TuneSection tune;

  /// Desk-scale defaults.
  RunConfig();

  void Validate() const;
  std::string ToJson() const;  // pretty printed, stable key order

  /// Overlays the keys present in `json` onto this config. Unknown keys
  /// are rejected.
  void MergeJson(std::string_view json);

  /// `section.key` or `seed`; the value is parsed as JSON when it is valid
  /// JSON and taken as a string otherwise.
  void Set(std::string_view dotted_key, std::string_view value);

  ModelConfig SeededModel(int vocab_size) const;
  TrainConfig SeededPretrain() const;
  TrainConfig SeededFinetune() const;
  DecodeConfig SeededDecode() const;
};

/// Defaults, then the file, then HEADGEN_SEED / HEADGEN_<SECTION>__<KEY>
/// environment variables, then `overrides` ("section.key=value").
RunConfig ResolveRunConfig(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides);

struct ParameterDoc {
  std::string key;
  std::string desk;
  std::string full_scale;  // "n/r" when the value is not reported
};

/// Desk defaults next to the published full-scale values.
std::vector<ParameterDoc> ParameterTable();

}  // namespace headgen
