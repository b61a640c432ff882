// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace headgen {

void DecodeConfig::Validate() const {
  if (groups < 1 || beams_per_group < 1) {
    Fail(ErrorKind::kInvalidArgument, "groups and beams must be >= 1");
  }
  if (!(diversity_penalty >= 0.0) || !(repetition_penalty >= 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "penalties must be >= 0");
  }
  if (!(length_decay > 0.0 && length_decay <= 1.0)) {
    Fail(ErrorKind::kInvalidArgument, "length decay must lie in (0, 1]");
  }
  if (max_len < 1) Fail(ErrorKind::kInvalidArgument, "max_len must be >= 1");
  if (!(temperature > 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "temperature must be positive");
  }
  if (top_k < 0) Fail(ErrorKind::kInvalidArgument, "top_k must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    Fail(ErrorKind::kInvalidArgument, "top_p must lie in (0, 1]");
  }
}

double ScoreUpdate(double prev_score, double token_logprob, double div_count,
                   double rep_count, double diversity, double repetition,
                   double length_decay) {
  return length_decay * prev_score + token_logprob - diversity * div_count -
         repetition * rep_count;
}

namespace {

std::vector<double> Score(Scorer& scorer, std::span<const TokenId> prompt,
                          const TokenSeq& suffix, TokenSeq* scratch) {
  scratch->assign(prompt.begin(), prompt.end());
  scratch->insert(scratch->end(), suffix.begin(), suffix.end());
  std::vector<double> lp = scorer.NextLogProbs(*scratch);
  if (lp.size() != scorer.vocab_size()) {
    Fail(ErrorKind::kState, "scorer returned a row of the wrong width");
  }
  return lp;
}

TokenId Argmax(const std::vector<double>& row) {
  TokenId best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(i);
  }
  return best;
}

struct Candidate {
  double score;
  TokenId token;
  int beam;
};

bool Better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.token != b.token) return a.token < b.token;
  return a.beam < b.beam;
}

struct GroupState {
  std::vector<Beam> active;
  std::vector<Beam> finished;
  bool done = false;
};

}  // namespace

TokenSeq Greedy(Scorer& scorer, std::span<const TokenId> prompt, int max_len,
                TokenId eos) {
  if (max_len < 1) Fail(ErrorKind::kInvalidArgument, "max_len must be >= 1");
  TokenSeq out, scratch;
  for (int step = 0; step < max_len; ++step) {
    const TokenId tok = Argmax(Score(scorer, prompt, out, &scratch));
    out.push_back(tok);
    if (tok == eos) break;
  }
  return out;
}

std::vector<Beam> BeamGroups::Flatten() const {
  std::vector<Beam> out;
  for (const auto& g : groups) {
    if (!g.empty()) out.push_back(g.front());
  }
  for (const auto& g : groups) {
    for (std::size_t i = 1; i < g.size(); ++i) out.push_back(g[i]);
  }
  return out;
}

BeamGroups DiverseBeamSearch(Scorer& scorer, std::span<const TokenId> prompt,
                             const DecodeConfig& config, TokenId eos) {
  config.Validate();
  const std::size_t vocab = scorer.vocab_size();
  const std::size_t width = static_cast<std::size_t>(config.beams_per_group);
  std::vector<GroupState> groups(static_cast<std::size_t>(config.groups));
  for (auto& g : groups) g.active.emplace_back();

  std::unordered_map<TokenId, int> prompt_counts;
  if (config.repeat_counts_prompt) {
    for (TokenId t : prompt) ++prompt_counts[t];
  }

  std::vector<int> ledger(vocab, 0);
  std::vector<Candidate> cands;
  TokenSeq scratch;
  for (int step = 0; step < config.max_len; ++step) {
    std::fill(ledger.begin(), ledger.end(), 0);
    bool any_active = false;
    for (GroupState& g : groups) {
      if (g.done) continue;
      const std::size_t slots = width - g.finished.size();
      cands.clear();
      for (std::size_t bi = 0; bi < g.active.size(); ++bi) {
        const Beam& beam = g.active[bi];
        const std::vector<double> lp = Score(scorer, prompt, beam.ids, &scratch);
        std::unordered_map<TokenId, int> reps = prompt_counts;
        for (TokenId t : beam.ids) ++reps[t];
        for (std::size_t v = 0; v < vocab; ++v) {
          const TokenId tok = static_cast<TokenId>(v);
          const auto r = reps.find(tok);
          const double rep = r == reps.end() ? 0.0 : r->second;
          cands.push_back({ScoreUpdate(beam.score, lp[v], ledger[v], rep,
                                       config.diversity_penalty,
                                       config.repetition_penalty,
                                       config.length_decay),
                           tok, static_cast<int>(bi)});
        }
      }
      const std::size_t take = std::min(slots, cands.size());
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take),
                        cands.end(), Better);

      std::vector<Beam> next;
      for (std::size_t i = 0; i < take; ++i) {
        const Candidate& c = cands[i];
        ++ledger[static_cast<std::size_t>(c.token)];
        Beam b;
        b.ids = g.active[static_cast<std::size_t>(c.beam)].ids;
        b.ids.push_back(c.token);
        b.score = c.score;
        if (c.token == eos) {
          b.finished = true;
          g.finished.push_back(std::move(b));
        } else {
          next.push_back(std::move(b));
        }
      }
      g.active = std::move(next);
      g.done = g.active.empty();
      any_active = any_active || !g.done;
    }
    if (!any_active) break;
  }

  BeamGroups out;
  for (GroupState& g : groups) {
    std::vector<Beam> beams = std::move(g.finished);
    beams.insert(beams.end(), g.active.begin(), g.active.end());
    std::stable_sort(beams.begin(), beams.end(),
                     [](const Beam& a, const Beam& b) { return a.score > b.score; });
    out.groups.push_back(std::move(beams));
  }
  return out;
}

std::vector<Beam> BeamSearch(Scorer& scorer, std::span<const TokenId> prompt,
                             int beams, int max_len, double length_decay,
                             double repetition, TokenId eos,
                             bool repeat_counts_prompt) {
  DecodeConfig c;
  c.groups = 1;
  c.beams_per_group = beams;
  c.diversity_penalty = 0.0;
  c.repetition_penalty = repetition;
  c.length_decay = length_decay;
  c.max_len = max_len;
  c.repeat_counts_prompt = repeat_counts_prompt;
  return DiverseBeamSearch(scorer, prompt, c, eos).groups.front();
}

TokenId SampleToken(std::span<const double> log_probs, double temperature,
                    int top_k, double top_p, std::mt19937_64& rng) {
  if (log_probs.empty()) Fail(ErrorKind::kInvalidArgument, "empty distribution");
  std::vector<TokenId> order;
  order.reserve(log_probs.size());
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    if (log_probs[i] > -INFINITY) order.push_back(static_cast<TokenId>(i));
  }
  if (order.empty()) Fail(ErrorKind::kNumeric, "distribution has no support");
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return log_probs[static_cast<std::size_t>(a)] > log_probs[static_cast<std::size_t>(b)];
  });
  if (top_k > 0 && order.size() > static_cast<std::size_t>(top_k)) {
    order.resize(static_cast<std::size_t>(top_k));
  }
  const double top = log_probs[static_cast<std::size_t>(order.front())] / temperature;
  std::vector<double> weights(order.size());
  double total = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    weights[i] = std::exp(log_probs[static_cast<std::size_t>(order[i])] / temperature - top);
    total += weights[i];
  }
  if (top_p < 1.0) {
    double cum = 0.0;
    std::size_t keep = order.size();
    for (std::size_t i = 0; i < order.size(); ++i) {
      cum += weights[i] / total;
      if (cum >= top_p) {
        keep = i + 1;
        break;
      }
    }
    order.resize(keep);
    weights.resize(keep);
    total = std::accumulate(weights.begin(), weights.end(), 0.0);
  }
  const double u =
      std::uniform_real_distribution<double>(0.0, 1.0)(rng) * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += weights[i];
    if (u < cum) return order[i];
  }
  return order.back();
}

TokenSeq GenerateSampling(Scorer& scorer, std::span<const TokenId> prompt,
                          double temperature, int top_k, double top_p,
                          int max_len, std::uint64_t seed, TokenId eos) {
  DecodeConfig check;
  check.temperature = temperature;
  check.top_k = top_k;
  check.top_p = top_p;
  check.max_len = max_len;
  check.Validate();
  std::mt19937_64 rng(seed);
  TokenSeq out, scratch;
  for (int step = 0; step < max_len; ++step) {
    const std::vector<double> lp = Score(scorer, prompt, out, &scratch);
    const TokenId tok = SampleToken(lp, temperature, top_k, top_p, rng);
    out.push_back(tok);
    if (tok == eos) break;
  }
  return out;
}

}  // namespace headgen
