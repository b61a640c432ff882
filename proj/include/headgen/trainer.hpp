// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/model.hpp"
#include "headgen/tokenizer.hpp"

namespace headgen {

struct TrainConfig {
  static constexpr int kFullScaleWarmup = 2000;

  double peak_lr = 1e-3;
  int n_warmup = kFullScaleWarmup;
  int batch_rows = 8;
  int seq_len = 128;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t max_steps = 0;  // 0: derive from epochs
  int epochs = 1;
  int checkpoint_every = 0;  // 0: only at the end
  std::uint64_t seed = 0;

  void Validate(const ModelConfig& model) const;
};

/// Linear warmup to peak_lr at n_warmup, then peak_lr * sqrt(n_warmup/step).
double LrAt(std::int64_t step, const TrainConfig& config);

struct OptimizerState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t step = 0;
  std::int64_t overflow_count = 0;

  explicit OptimizerState(std::size_t n = 0) : m(n, 0.0f), v(n, 0.0f) {}
  bool operator==(const OptimizerState&) const = default;
};

/// Adam with decoupled weight decay, applied only where decay_mask is set.
/// A non-finite gradient rejects the whole step and bumps overflow_count.
/// Returns whether the step was applied.
bool AdamWStep(std::span<float> params, std::span<const float> grads,
               std::span<const std::uint8_t> decay_mask, OptimizerState& state,
               double lr, const TrainConfig& config);

/// Concatenates documents and cuts them into rows x seq_len blocks; the
/// trailing partial block is dropped.
std::vector<std::vector<TokenSeq>> PackPretrainBatches(
    std::span<const TokenSeq> documents, int batch_rows, int seq_len);

/// `<sos>` text `<eos>`.
TokenSeq WrapDocument(const TokenSeq& text, const Vocab& vocab);

struct FinetuneExample {
  static constexpr std::size_t kBodyClip = 448;
  static constexpr std::size_t kTitleClip = 62;
  static constexpr std::size_t kMaxLength = 512;

  TokenSeq ids;
  LossMask mask;  // ids.size() - 1 entries
};

/// body[:448] <special1> title[:62] <eos>, with the loss on the title and
/// end token only.
FinetuneExample FormatFinetuneExample(std::span<const TokenId> body_ids,
                                      std::span<const TokenId> title_ids,
                                      const Vocab& vocab);

struct Checkpoint {
  ModelConfig config;
  std::uint64_t vocab_hash = 0;
  bool finetuned = false;
  std::vector<float> params;
  std::optional<OptimizerState> optimizer;
  std::int64_t train_step = 0;

  Model<float> ToModel() const;
  static Checkpoint FromModel(const Model<float>& model, std::uint64_t vocab_hash);
};

/// Binary, little-endian: "HGCK", u32 version, u32 n_layers, d_model,
/// n_heads, context, vocab_size, u64 seed, u64 vocab hash, u32 flags
/// (bit 0 finetuned, bit 1 optimizer present), i64 train step, u64 count,
/// f32 parameters in ParamLayout order; then, with an optimizer, i64 adam
/// step, i64 overflow count, f32 first moments, f32 second moments.
std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(const std::string& bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

struct TrainLogEntry {
  std::string phase;
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_ppl;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<TrainLogEntry> log;
};

/// Indices of the batch used at 1-based `step`: epochs are seeded
/// permutations, so any step can be recomputed after a restart.
std::vector<std::size_t> BatchIndices(std::size_t n_items, std::size_t per_batch,
                                      std::int64_t step, std::uint64_t seed);

/// Next-token training on packed documents (already `<sos>`/`<eos>`
/// wrapped). Resumes from `start.train_step`. Writes checkpoints and a
/// line-delimited log under `out_dir` when it is non-empty. A non-finite
/// loss aborts after writing the last good checkpoint.
TrainOutcome Pretrain(const Checkpoint& start, std::span<const TokenSeq> train_docs,
                      std::span<const TokenSeq> valid_docs,
                      const TrainConfig& config,
                      const std::filesystem::path& out_dir = {});

/// Continues from a pre-trained checkpoint, optimizer state included, with
/// the loss restricted to headline positions.
TrainOutcome Finetune(const Checkpoint& start,
                      std::span<const FinetuneExample> train,
                      std::span<const FinetuneExample> valid,
                      const TrainConfig& config, std::uint64_t vocab_hash,
                      const std::filesystem::path& out_dir = {});

/// exp(mean masked NLL) over the examples.
double MaskedPerplexity(const Model<float>& model,
                        std::span<const FinetuneExample> examples);

}  // namespace headgen
