// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/scorer.hpp"

namespace headgen {

/// Decoding hyperparameters. Defaults are the tuned headline setting:
/// 4 groups of 2 beams, diversity 0.71, repetition 3, length decay 0.87 and
/// at most 48 generated tokens.
struct DecodeConfig {
  static constexpr double kMinUsableTemperature = 0.6;
  static constexpr double kMaxUsableTemperature = 1.0;

  int groups = 4;
  int beams_per_group = 2;
  double diversity_penalty = 0.71;
  double repetition_penalty = 3.0;
  double length_decay = 0.87;
  int max_len = 48;
  double temperature = 1.0;
  int top_k = 0;  // 0 disables
  double top_p = 1.0;
  std::uint64_t seed = 0;
  // When set, prompt occurrences also count toward the repetition penalty.
  bool repeat_counts_prompt = false;

  void Validate() const;
};

struct Beam {
  TokenSeq ids;  // generated suffix, including a terminal eos when finished
  double score = 0.0;
  bool finished = false;

  bool operator==(const Beam&) const = default;
};

/// beta * prev + logp - lambda * div_count - lambda_repeat * rep_count.
double ScoreUpdate(double prev_score, double token_logprob, double div_count,
                   double rep_count, double diversity, double repetition,
                   double length_decay);

/// Argmax decoding; ties go to the lower token id. Stops after eos.
TokenSeq Greedy(Scorer& scorer, std::span<const TokenId> prompt, int max_len,
                TokenId eos);

struct BeamGroups {
  std::vector<std::vector<Beam>> groups;  // each sorted best first

  /// Best beam of every group, then the remaining beams group by group.
  std::vector<Beam> Flatten() const;
};

/// Groups advance in order at every step; group g pays diversity_penalty
/// for each selection of the same token by groups < g at that step, and
/// every beam pays repetition_penalty per earlier occurrence of the token in
/// its own sequence. Beams that emit eos retire with their score frozen.
/// Ranking ties: higher score, then lower token id, then lower beam index.
BeamGroups DiverseBeamSearch(Scorer& scorer, std::span<const TokenId> prompt,
                             const DecodeConfig& config, TokenId eos);

/// Plain beam search of width `beams`: one group, no diversity penalty.
std::vector<Beam> BeamSearch(Scorer& scorer, std::span<const TokenId> prompt,
                             int beams, int max_len, double length_decay,
                             double repetition, TokenId eos,
                             bool repeat_counts_prompt = false);

/// One draw from log-probabilities after temperature, top-k and then top-p
/// truncation.
TokenId SampleToken(std::span<const double> log_probs, double temperature,
                    int top_k, double top_p, std::mt19937_64& rng);

TokenSeq GenerateSampling(Scorer& scorer, std::span<const TokenId> prompt,
                          double temperature, int top_k, double top_p,
                          int max_len, std::uint64_t seed, TokenId eos);

}  // namespace headgen
