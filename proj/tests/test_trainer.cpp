// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "headgen/trainer.hpp"

namespace headgen {
namespace {

ModelConfig SmallModel(int vocab) {
  ModelConfig c;
  c.n_layers = 2;
  c.d_model = 32;
  c.n_heads = 2;
  c.context = 64;
  c.vocab_size = vocab;
  c.seed = 21;
  return c;
}

TokenSeq Iota(std::size_t n, TokenId start = 0) {
  TokenSeq t(n);
  std::iota(t.begin(), t.end(), start);
  return t;
}

std::filesystem::path TempDir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("headgen_" + name);
  std::filesystem::remove_all(p);
  return p;
}

TEST(LrSchedule, PeaksAtWarmupEnd) {
  TrainConfig c;
  c.peak_lr = 3e-4;
  c.n_warmup = 2000;
  EXPECT_DOUBLE_EQ(LrAt(2000, c), 3e-4);
  EXPECT_DOUBLE_EQ(LrAt(1, c), 3e-4 / 2000.0);
  EXPECT_DOUBLE_EQ(LrAt(8000, c), 3e-4 / 2.0);
}

TEST(LrSchedule, ContinuousAcrossWarmupBoundary) {
  for (int w : {1, 7, 100, 2000}) {
    TrainConfig c;
    c.peak_lr = 1e-3;
    c.n_warmup = w;
    const double decay_limit = c.peak_lr * std::sqrt(static_cast<double>(w) / w);
    EXPECT_DOUBLE_EQ(LrAt(w, c), decay_limit);
    const double jump = std::abs(LrAt(w + 1, c) - LrAt(w, c));
    EXPECT_LE(jump, c.peak_lr / w + 1e-15);
  }
  TrainConfig c;
  EXPECT_THROW(LrAt(0, c), Error);
}

TEST(AdamW, ZeroGradientsNoDecayLeaveParams) {
  std::vector<float> p = {0.5f, -1.25f, 3.0f};
  const std::vector<float> g(3, 0.0f);
  const std::vector<std::uint8_t> mask(3, 1);
  OptimizerState st(3);
  TrainConfig c;
  ASSERT_TRUE(AdamWStep(p, g, mask, st, 1e-2, c));
  EXPECT_EQ(p, (std::vector<float>{0.5f, -1.25f, 3.0f}));
  EXPECT_EQ(st.step, 1);
}

TEST(AdamW, OneStepMatchesHandCalculation) {
  std::vector<float> p = {0.5f};
  const std::vector<float> g = {1.0f};
  const std::vector<std::uint8_t> mask = {0};
  OptimizerState st(1);
  TrainConfig c;
  const double lr = 1e-3;
  AdamWStep(p, g, mask, st, lr, c);
  // m = 0.1, v = 0.001; bias corrections 0.1 and 0.001 give m_hat = v_hat = 1.
  const double expected = 0.5 - lr * 1.0 / (1.0 + 1e-8);
  EXPECT_NEAR(p[0], expected, 1e-7);
  EXPECT_NEAR(st.m[0], 0.1f, 1e-8);
  EXPECT_NEAR(st.v[0], 0.001f, 1e-10);
}

TEST(AdamW, DecoupledDecayOnlyWhereMasked) {
  std::vector<float> p = {2.0f, 2.0f};
  const std::vector<float> g(2, 0.0f);
  const std::vector<std::uint8_t> mask = {1, 0};
  OptimizerState st(2);
  TrainConfig c;
  c.weight_decay = 0.1;
  const double lr = 0.5;
  AdamWStep(p, g, mask, st, lr, c);
  EXPECT_FLOAT_EQ(p[0], static_cast<float>(2.0 * (1.0 - lr * 0.1)));
  EXPECT_EQ(p[1], 2.0f);
}

TEST(AdamW, NonFiniteGradientRejectsStep) {
  std::vector<float> p = {1.0f, 2.0f};
  const std::vector<float> g = {0.5f, std::numeric_limits<float>::infinity()};
  const std::vector<std::uint8_t> mask(2, 1);
  OptimizerState st(2);
  TrainConfig c;
  EXPECT_FALSE(AdamWStep(p, g, mask, st, 1e-3, c));
  EXPECT_EQ(p, (std::vector<float>{1.0f, 2.0f}));
  EXPECT_EQ(st.overflow_count, 1);
  EXPECT_EQ(st.step, 0);
  EXPECT_EQ(st.m, std::vector<float>(2, 0.0f));
}

TEST(Packing, ExactDivisionLosesNothing) {
  std::vector<TokenSeq> docs;
  for (int d = 0; d < 10; ++d) docs.push_back(Iota(100, d * 100));
  const auto blocks = PackPretrainBatches(docs, 2, 100);
  EXPECT_EQ(blocks.size(), 5u);
  TokenId expect = 0;
  for (const auto& b : blocks) {
    ASSERT_EQ(b.size(), 2u);
    for (const auto& row : b) {
      ASSERT_EQ(row.size(), 100u);
      for (TokenId id : row) EXPECT_EQ(id, expect++);
    }
  }
}

TEST(Packing, PartialBlockDropped) {
  const std::vector<TokenSeq> docs = {Iota(700), Iota(350, 700)};
  const auto blocks = PackPretrainBatches(docs, 2, 100);
  EXPECT_EQ(blocks.size(), 5u);
  EXPECT_EQ(blocks.back().back().back(), 999);
}

TEST(Packing, PreservesOrderForRandomShapes) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TokenSeq> docs(1 + UniformBelow(rng, 6));
    TokenId next = 0;
    for (auto& d : docs) {
      d = Iota(UniformBelow(rng, 50), next);
      next += static_cast<TokenId>(d.size());
    }
    const int rows = 1 + static_cast<int>(UniformBelow(rng, 3));
    const int len = 2 + static_cast<int>(UniformBelow(rng, 10));
    const auto blocks = PackPretrainBatches(docs, rows, len);
    const std::size_t block = static_cast<std::size_t>(rows * len);
    EXPECT_EQ(blocks.size(), static_cast<std::size_t>(next) / block);
    TokenId expect = 0;
    for (const auto& b : blocks) {
      for (const auto& row : b) {
        for (TokenId id : row) EXPECT_EQ(id, expect++);
      }
    }
  }
}

TEST(FinetuneFormat, LongBodyIsClipped) {
  const Vocab v;
  const auto ex = FormatFinetuneExample(Iota(600), Iota(10, 100), v);
  EXPECT_EQ(ex.ids.size(), 460u);
  EXPECT_EQ(std::count(ex.mask.begin(), ex.mask.end(), 1), 11);
  EXPECT_EQ(ex.ids[448], v.SpecialId("<special1>"));
  EXPECT_EQ(ex.ids.back(), v.eos());
  EXPECT_EQ(ex.ids[447], 447);
}

TEST(FinetuneFormat, ShortBodyKept) {
  const Vocab v;
  const TokenSeq body = Iota(5, 40);
  const TokenSeq title = Iota(7, 60);
  const auto ex = FormatFinetuneExample(body, title, v);
  EXPECT_EQ(ex.ids.size(), 5u + 1 + 7 + 1);
  EXPECT_TRUE(std::equal(body.begin(), body.end(), ex.ids.begin()));
  ASSERT_EQ(ex.mask.size(), ex.ids.size() - 1);
  // Position t predicts token t+1: the first selected target is the first
  // headline token, the last is the end token.
  for (std::size_t t = 0; t < ex.mask.size(); ++t) EXPECT_EQ(ex.mask[t], t >= 5 ? 1 : 0);
}

TEST(FinetuneFormat, LongTitleFillsBudget) {
  const Vocab v;
  const auto ex = FormatFinetuneExample(Iota(500), Iota(100), v);
  EXPECT_EQ(ex.ids.size(), 512u);
  EXPECT_EQ(std::count(ex.mask.begin(), ex.mask.end(), 1), 63);
}

TEST(FinetuneFormat, NeverExceedsBudget) {
  const Vocab v;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto ex = FormatFinetuneExample(Iota(UniformBelow(rng, 1000)),
                                          Iota(1 + UniformBelow(rng, 200)), v);
    EXPECT_LE(ex.ids.size(), FinetuneExample::kMaxLength);
  }
  EXPECT_THROW(FormatFinetuneExample(Iota(3), {}, v), Error);
}

TEST(Checkpoints, SerializeDeserializeSerializeIsStable) {
  Checkpoint c = Checkpoint::FromModel(Model<float>::Init(SmallModel(270)), 0xABCDEFull);
  c.train_step = 17;
  c.optimizer->m[3] = 0.25f;
  c.optimizer->v[5] = 0.5f;
  c.optimizer->step = 17;
  c.optimizer->overflow_count = 2;
  const std::string bytes = SerializeCheckpoint(c);
  const Checkpoint back = DeserializeCheckpoint(bytes);
  EXPECT_EQ(SerializeCheckpoint(back), bytes);
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.optimizer, c.optimizer);
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.vocab_hash, c.vocab_hash);

  const auto dir = TempDir("ckpt");
  std::filesystem::create_directories(dir);
  SaveCheckpoint(dir / "a.ckpt", back);
  const Checkpoint loaded = LoadCheckpoint(dir / "a.ckpt");
  SaveCheckpoint(dir / "b.ckpt", loaded);
  std::ifstream a(dir / "a.ckpt", std::ios::binary), b(dir / "b.ckpt", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoints, TruncatedBytesAreFormatErrors) {
  const Checkpoint c = Checkpoint::FromModel(Model<float>::Init(SmallModel(270)), 1);
  std::string bytes = SerializeCheckpoint(c);
  bytes.resize(bytes.size() - 3);
  try {
    DeserializeCheckpoint(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  EXPECT_THROW(DeserializeCheckpoint("nope"), Error);
}

TEST(BatchIndicesTest, EveryEpochIsAPermutation) {
  const std::size_t n = 23, per = 5;
  for (std::int64_t epoch = 0; epoch < 3; ++epoch) {
    std::multiset<std::size_t> seen;
    for (std::int64_t b = 1; b <= 5; ++b) {
      for (std::size_t i : BatchIndices(n, per, epoch * 5 + b, 4)) seen.insert(i);
    }
    ASSERT_EQ(seen.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen.count(i), 1u);
  }
  EXPECT_EQ(BatchIndices(n, per, 7, 4), BatchIndices(n, per, 7, 4));
}

// Documents over a tiny alphabet with strong local structure.
std::vector<TokenSeq> PatternDocs(std::size_t n, std::uint64_t seed, const Vocab& v) {
  std::mt19937_64 rng(seed);
  std::vector<TokenSeq> docs;
  for (std::size_t d = 0; d < n; ++d) {
    TokenSeq text;
    TokenId a = static_cast<TokenId>('a' + UniformBelow(rng, 6));
    for (int i = 0; i < 30; ++i) {
      text.push_back(a);
      a = static_cast<TokenId>('a' + (a - 'a' + 1) % 6);
    }
    docs.push_back(WrapDocument(text, v));
  }
  return docs;
}

TrainConfig QuickTrain() {
  TrainConfig c;
  c.peak_lr = 3e-3;
  c.n_warmup = 5;
  c.batch_rows = 2;
  c.seq_len = 32;
  c.seed = 6;
  return c;
}

TEST(Pretraining, ZeroStepsReturnsInitialization) {
  const Vocab v;
  const auto docs = PatternDocs(8, 1, v);
  const Checkpoint start =
      Checkpoint::FromModel(Model<float>::Init(SmallModel(static_cast<int>(v.size()))), v.Hash());
  TrainConfig c = QuickTrain();
  c.epochs = 0;
  const TrainOutcome out = Pretrain(start, docs, docs, c);
  EXPECT_EQ(out.checkpoint.params, start.params);
  EXPECT_EQ(out.checkpoint.train_step, 0);
  EXPECT_TRUE(out.log.empty());
}

TEST(Pretraining, LossFallsOnPatternedText) {
  const Vocab v;
  const auto train = PatternDocs(40, 2, v);
  const auto valid = PatternDocs(6, 3, v);
  const Checkpoint start =
      Checkpoint::FromModel(Model<float>::Init(SmallModel(static_cast<int>(v.size()))), v.Hash());
  TrainConfig c = QuickTrain();
  c.max_steps = 60;
  const TrainOutcome out = Pretrain(start, train, valid, c);
  ASSERT_EQ(out.log.size(), 60u);
  ASSERT_TRUE(out.log.back().val_ppl.has_value());
  EXPECT_LT(out.log.back().loss, out.log.front().loss);
  EXPECT_LT(*out.log.back().val_ppl, static_cast<double>(v.size()) / 10.0);
}

TEST(Pretraining, ResumeReproducesUninterruptedRun) {
  const Vocab v;
  const auto train = PatternDocs(20, 4, v);
  const Checkpoint start =
      Checkpoint::FromModel(Model<float>::Init(SmallModel(static_cast<int>(v.size()))), v.Hash());
  TrainConfig c = QuickTrain();
  c.max_steps = 8;
  const TrainOutcome full = Pretrain(start, train, {}, c);

  const auto dir = TempDir("resume");
  c.max_steps = 4;
  Pretrain(start, train, {}, c, dir);
  const Checkpoint mid = LoadCheckpoint(dir / "latest.ckpt");
  EXPECT_EQ(mid.train_step, 4);
  c.max_steps = 8;
  const TrainOutcome resumed = Pretrain(mid, train, {}, c, dir);
  ASSERT_EQ(resumed.log.size(), 4u);
  EXPECT_EQ(resumed.log.front().step, 5);
  EXPECT_EQ(resumed.log.front().loss, full.log[4].loss);
  EXPECT_EQ(resumed.checkpoint.params, full.checkpoint.params);
  EXPECT_EQ(resumed.checkpoint.optimizer, full.checkpoint.optimizer);

  std::ifstream log(dir / "train_log.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 8u);
  std::filesystem::remove_all(dir);
}

std::vector<FinetuneExample> CopyExamples(std::size_t n, std::uint64_t seed, const Vocab& v) {
  std::mt19937_64 rng(seed);
  std::vector<FinetuneExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSeq body;
    for (int k = 0; k < 12; ++k) body.push_back(static_cast<TokenId>('a' + UniformBelow(rng, 8)));
    const TokenSeq title(body.begin(), body.begin() + 3);
    out.push_back(FormatFinetuneExample(body, title, v));
  }
  return out;
}

TEST(Finetuning, FirstLossEqualsLoadedModelMaskedLoss) {
  const Vocab v;
  const auto train = CopyExamples(6, 5, v);
  const Checkpoint start =
      Checkpoint::FromModel(Model<float>::Init(SmallModel(static_cast<int>(v.size()))), v.Hash());
  TrainConfig c = QuickTrain();
  c.batch_rows = 8;  // one batch holds every example
  c.max_steps = 1;
  const TrainOutcome out = Finetune(start, train, {}, c, v.Hash());
  ASSERT_EQ(out.log.size(), 1u);
  const double expected = std::log(MaskedPerplexity(start.ToModel(), train));
  EXPECT_NEAR(out.log.front().loss, expected, 1e-5);
  EXPECT_TRUE(out.checkpoint.finetuned);
}

TEST(Finetuning, MaskedValidationLossDrops) {
  const Vocab v;
  const auto train = CopyExamples(64, 6, v);
  const auto valid = CopyExamples(16, 7, v);
  const Checkpoint start =
      Checkpoint::FromModel(Model<float>::Init(SmallModel(static_cast<int>(v.size()))), v.Hash());
  TrainConfig c = QuickTrain();
  c.batch_rows = 8;
  c.max_steps = 80;
  const double before = MaskedPerplexity(start.ToModel(), valid);
  const TrainOutcome out = Finetune(start, train, valid, c, v.Hash());
  ASSERT_TRUE(out.log.back().val_ppl.has_value());
  EXPECT_LT(*out.log.back().val_ppl, before);
}

TEST(Finetuning, RejectsForeignVocabulary) {
  const Vocab v;
  const auto train = CopyExamples(2, 5, v);
  const Checkpoint start =
      Checkpoint::FromModel(Model<float>::Init(SmallModel(static_cast<int>(v.size()))), v.Hash());
  try {
    Finetune(start, train, {}, QuickTrain(), v.Hash() + 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

}  // namespace
}  // namespace headgen
