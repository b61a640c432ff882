// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "headgen/config.hpp"

namespace headgen {

/// Whole-word, case-sensitive occurrence of `entity` in `text`.
bool ContainsEntity(std::string_view text, std::string_view entity);

struct PipelineResult {
  std::size_t articles = 0;
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
  std::size_t vocab_size = 0;
  std::size_t parameters = 0;
  std::int64_t pretrain_steps = 0;
  std::int64_t finetune_steps = 0;
  double pretrain_val_ppl = 0.0;
  double finetune_val_ppl = 0.0;
  std::vector<double> tuned_point;  // diversity, repetition, length decay
  double tuned_bleu = 0.0;
  double default_bleu = 0.0;
  std::size_t entity_hits = 0;
  double entity_match_rate = 0.0;
  double mean_distinct_headlines = 0.0;
  double mean_distinct_first_tokens = 0.0;
  double mean_headline_tokens = 0.0;
  std::string report;  // byte-stable for a given config
};

using ProgressFn = std::function<void(const std::string&)>;

/// Synthetic corpus, tokenizer, pre-training, fine-tuning, a small decoding
/// search, held-out generation and a blinded worksheet. Headlines for the
/// held-out articles use `config.decode`; the searched point is reported.
/// When `out_dir` is non-empty every artifact and the resolved config are
/// written there. A failing stage throws an Error naming the stage.
PipelineResult RunPipeline(const RunConfig& config, const std::filesystem::path& out_dir,
                           const ProgressFn& progress = {});

}  // namespace headgen
