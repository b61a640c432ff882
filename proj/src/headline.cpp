// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/headline.hpp"

#include <algorithm>

#include "headgen/common.hpp"
#include "headgen/metrics.hpp"
#include "headgen/trainer.hpp"

namespace headgen {

DecodeAlgo ParseDecodeAlgo(std::string_view name) {
  if (name == "greedy") return DecodeAlgo::kGreedy;
  if (name == "sample") return DecodeAlgo::kSample;
  if (name == "beam") return DecodeAlgo::kBeam;
  if (name == "dbs") return DecodeAlgo::kDbs;
  Fail(ErrorKind::kInvalidArgument, "unknown decoding algorithm '" + std::string(name) +
                                        "' (expected greedy, sample, beam or dbs)");
}

const char* DecodeAlgoName(DecodeAlgo algo) {
  switch (algo) {
    case DecodeAlgo::kGreedy: return "greedy";
    case DecodeAlgo::kSample: return "sample";
    case DecodeAlgo::kBeam: return "beam";
    case DecodeAlgo::kDbs: return "dbs";
  }
  return "dbs";
}

TokenSeq HeadlinePrompt(std::span<const TokenId> body_ids, const Vocab& vocab) {
  const std::size_t n = std::min(body_ids.size(), FinetuneExample::kBodyClip);
  TokenSeq prompt(body_ids.begin(), body_ids.begin() + static_cast<std::ptrdiff_t>(n));
  prompt.push_back(vocab.SpecialId("<special1>"));
  return prompt;
}

namespace {

GeneratedHeadline MakeHeadline(TokenSeq ids, double score, const Vocab& vocab) {
  if (!ids.empty() && ids.back() == vocab.eos()) ids.pop_back();
  GeneratedHeadline h;
  h.text = vocab.Decode(ids);
  h.ids = std::move(ids);
  h.score = score;
  return h;
}

}  // namespace

std::vector<GeneratedHeadline> GenerateHeadlines(ModelScorer& scorer, const Vocab& vocab,
                                                 std::string_view body,
                                                 const DecodeConfig& config,
                                                 DecodeAlgo algo) {
  config.Validate();
  if (scorer.vocab_size() != vocab.size()) {
    Fail(ErrorKind::kState, "model and vocabulary sizes differ");
  }
  const TokenSeq prompt = HeadlinePrompt(vocab.Encode(body), vocab);
  const int room = scorer.context() - static_cast<int>(prompt.size());
  if (room < 1) Fail(ErrorKind::kInvalidArgument, "prompt leaves no room in the model context");
  DecodeConfig cfg = config;
  cfg.max_len = std::min(cfg.max_len, room);
  const TokenId eos = vocab.eos();

  std::vector<GeneratedHeadline> out;
  switch (algo) {
    case DecodeAlgo::kGreedy:
      out.push_back(MakeHeadline(Greedy(scorer, prompt, cfg.max_len, eos), 0.0, vocab));
      break;
    case DecodeAlgo::kSample:
      out.push_back(MakeHeadline(GenerateSampling(scorer, prompt, cfg.temperature, cfg.top_k,
                                                  cfg.top_p, cfg.max_len, cfg.seed, eos),
                                 0.0, vocab));
      break;
    case DecodeAlgo::kBeam: {
      const auto beams = BeamSearch(scorer, prompt, cfg.groups * cfg.beams_per_group, cfg.max_len,
                                    cfg.length_decay, cfg.repetition_penalty, eos,
                                    cfg.repeat_counts_prompt);
      out.push_back(MakeHeadline(beams.front().ids, beams.front().score, vocab));
      break;
    }
    case DecodeAlgo::kDbs: {
      const BeamGroups groups = DiverseBeamSearch(scorer, prompt, cfg, eos);
      for (const auto& g : groups.groups) {
        out.push_back(MakeHeadline(g.front().ids, g.front().score, vocab));
      }
      break;
    }
  }
  scorer.Clear();
  return out;
}

double MeanSetBleu(ModelScorer& scorer, const Vocab& vocab,
                   std::span<const HeadlineExample> examples, const DecodeConfig& config) {
  if (examples.empty()) Fail(ErrorKind::kInvalidArgument, "no tuning articles");
  double sum = 0.0;
  for (const auto& ex : examples) {
    const auto set = GenerateHeadlines(scorer, vocab, ex.body, config, DecodeAlgo::kDbs);
    std::vector<TokenSeq> candidates;
    for (const auto& h : set) candidates.push_back(h.ids);
    sum += HeadlineSetBleu(candidates, vocab.Encode(ex.headline));
  }
  return sum / static_cast<double>(examples.size());
}

}  // namespace headgen
