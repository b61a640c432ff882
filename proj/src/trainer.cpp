// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "headgen/metrics.hpp"
#include "json.hpp"

namespace headgen {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void TrainConfig::Validate(const ModelConfig& model) const {
  if (!(peak_lr > 0.0)) Fail(ErrorKind::kInvalidArgument, "peak_lr must be positive");
  if (n_warmup < 1) Fail(ErrorKind::kInvalidArgument, "n_warmup must be >= 1");
  if (batch_rows < 1) Fail(ErrorKind::kInvalidArgument, "batch_rows must be >= 1");
  if (seq_len < 2 || seq_len > model.context) {
    Fail(ErrorKind::kInvalidArgument, "seq_len must lie in [2, context]");
  }
  if (!(weight_decay >= 0.0)) Fail(ErrorKind::kInvalidArgument, "weight_decay must be >= 0");
  if (max_steps < 0 || epochs < 0 || checkpoint_every < 0) {
    Fail(ErrorKind::kInvalidArgument, "step counts must be >= 0");
  }
}

double LrAt(std::int64_t step, const TrainConfig& c) {
  if (step < 1) Fail(ErrorKind::kInvalidArgument, "learning-rate step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(c.n_warmup);
  if (step <= c.n_warmup) return c.peak_lr * s / w;
  return c.peak_lr * std::sqrt(w / s);
}

bool AdamWStep(std::span<float> params, std::span<const float> grads,
               std::span<const std::uint8_t> decay_mask, OptimizerState& st,
               double lr, const TrainConfig& c) {
  const std::size_t n = params.size();
  if (grads.size() != n || decay_mask.size() != n || st.m.size() != n ||
      st.v.size() != n) {
    Fail(ErrorKind::kInvalidArgument, "optimizer shapes disagree");
  }
  for (float g : grads) {
    if (!std::isfinite(g)) {
      ++st.overflow_count;
      return false;
    }
  }
  const std::int64_t t = st.step + 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const double decay = 1.0 - lr * c.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    const double m = c.beta1 * st.m[i] + (1.0 - c.beta1) * g;
    const double v = c.beta2 * st.v[i] + (1.0 - c.beta2) * g * g;
    st.m[i] = static_cast<float>(m);
    st.v[i] = static_cast<float>(v);
    double p = params[i];
    if (decay_mask[i]) p *= decay;
    p -= lr * (m / bc1) / (std::sqrt(v / bc2) + c.eps);
    params[i] = static_cast<float>(p);
  }
  st.step = t;
  return true;
}

std::vector<std::vector<TokenSeq>> PackPretrainBatches(
    std::span<const TokenSeq> documents, int batch_rows, int seq_len) {
  if (batch_rows < 1 || seq_len < 1) {
    Fail(ErrorKind::kInvalidArgument, "batch shape must be positive");
  }
  const std::size_t block = static_cast<std::size_t>(batch_rows) *
                            static_cast<std::size_t>(seq_len);
  std::vector<std::vector<TokenSeq>> out;
  TokenSeq pending;
  pending.reserve(block);
  const auto flush = [&] {
    std::vector<TokenSeq> rows;
    for (int r = 0; r < batch_rows; ++r) {
      rows.emplace_back(pending.begin() + r * seq_len,
                        pending.begin() + (r + 1) * seq_len);
    }
    out.push_back(std::move(rows));
    pending.clear();
  };
  for (const TokenSeq& doc : documents) {
    for (TokenId id : doc) {
      pending.push_back(id);
      if (pending.size() == block) flush();
    }
  }
  return out;
}

TokenSeq WrapDocument(const TokenSeq& text, const Vocab& vocab) {
  TokenSeq out;
  out.reserve(text.size() + 2);
  out.push_back(vocab.sos());
  out.insert(out.end(), text.begin(), text.end());
  out.push_back(vocab.eos());
  return out;
}

FinetuneExample FormatFinetuneExample(std::span<const TokenId> body_ids,
                                      std::span<const TokenId> title_ids,
                                      const Vocab& vocab) {
  if (title_ids.empty()) Fail(ErrorKind::kInvalidArgument, "empty headline");
  const std::size_t body = std::min(body_ids.size(), FinetuneExample::kBodyClip);
  const std::size_t title = std::min(title_ids.size(), FinetuneExample::kTitleClip);
  FinetuneExample ex;
  ex.ids.reserve(body + title + 2);
  ex.ids.insert(ex.ids.end(), body_ids.begin(), body_ids.begin() + body);
  ex.ids.push_back(vocab.SpecialId("<special1>"));
  ex.ids.insert(ex.ids.end(), title_ids.begin(), title_ids.begin() + title);
  ex.ids.push_back(vocab.eos());
  ex.mask.assign(ex.ids.size() - 1, 0);
  std::fill(ex.mask.begin() + static_cast<std::ptrdiff_t>(body), ex.mask.end(),
            std::uint8_t{1});
  return ex;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCkptMagic[4] = {'H', 'G', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename V>
void Put(std::string* out, V value) {
  char buf[sizeof(V)];
  std::memcpy(buf, &value, sizeof(V));
  out->append(buf, sizeof(V));
}

void PutFloats(std::string* out, const std::vector<float>& v) {
  out->append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename V>
  V Get() {
    Need(sizeof(V));
    V value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return value;
  }
  std::vector<float> Floats(std::size_t n) {
    Need(n * sizeof(float));
    std::vector<float> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return v;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) Fail(ErrorKind::kFormat, "truncated checkpoint");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Model<float> Checkpoint::ToModel() const {
  Model<float> m(config);
  if (params.size() != m.params().size()) {
    Fail(ErrorKind::kFormat, "checkpoint parameter count does not match its config");
  }
  m.params().assign(params.begin(), params.end());
  return m;
}

Checkpoint Checkpoint::FromModel(const Model<float>& model, std::uint64_t vocab_hash) {
  Checkpoint c;
  c.config = model.config();
  c.vocab_hash = vocab_hash;
  c.params.assign(model.params().begin(), model.params().end());
  c.optimizer = OptimizerState(c.params.size());
  return c;
}

std::string SerializeCheckpoint(const Checkpoint& c) {
  std::string out;
  out.append(kCkptMagic, 4);
  Put<std::uint32_t>(&out, kCkptVersion);
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(c.config.n_layers));
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(c.config.d_model));
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(c.config.n_heads));
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(c.config.context));
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(c.config.vocab_size));
  Put<std::uint64_t>(&out, c.config.seed);
  Put<std::uint64_t>(&out, c.vocab_hash);
  const std::uint32_t flags = (c.finetuned ? 1u : 0u) | (c.optimizer ? 2u : 0u);
  Put<std::uint32_t>(&out, flags);
  Put<std::int64_t>(&out, c.train_step);
  Put<std::uint64_t>(&out, c.params.size());
  PutFloats(&out, c.params);
  if (c.optimizer) {
    Put<std::int64_t>(&out, c.optimizer->step);
    Put<std::int64_t>(&out, c.optimizer->overflow_count);
    PutFloats(&out, c.optimizer->m);
    PutFloats(&out, c.optimizer->v);
  }
  return out;
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCkptMagic, 4) != 0) {
    Fail(ErrorKind::kFormat, "not a checkpoint file");
  }
  const std::string body = bytes.substr(4);
  Reader in(body);
  const auto version = in.Get<std::uint32_t>();
  if (version != kCkptVersion) {
    Fail(ErrorKind::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.config.n_layers = static_cast<int>(in.Get<std::uint32_t>());
  c.config.d_model = static_cast<int>(in.Get<std::uint32_t>());
  c.config.n_heads = static_cast<int>(in.Get<std::uint32_t>());
  c.config.context = static_cast<int>(in.Get<std::uint32_t>());
  c.config.vocab_size = static_cast<int>(in.Get<std::uint32_t>());
  c.config.seed = in.Get<std::uint64_t>();
  c.config.Validate();
  c.vocab_hash = in.Get<std::uint64_t>();
  const auto flags = in.Get<std::uint32_t>();
  c.finetuned = (flags & 1u) != 0;
  c.train_step = in.Get<std::int64_t>();
  const auto count = in.Get<std::uint64_t>();
  if (count != ParamLayout(c.config).total()) {
    Fail(ErrorKind::kFormat, "checkpoint parameter count does not match its config");
  }
  c.params = in.Floats(count);
  if (flags & 2u) {
    OptimizerState st;
    st.step = in.Get<std::int64_t>();
    st.overflow_count = in.Get<std::int64_t>();
    st.m = in.Floats(count);
    st.v = in.Floats(count);
    c.optimizer = std::move(st);
  }
  if (!in.AtEnd()) Fail(ErrorKind::kFormat, "trailing bytes in checkpoint");
  return c;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = SerializeCheckpoint(ckpt);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) Fail(ErrorKind::kIo, "cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

// ---------------------------------------------------------------------------
// Training loops

std::vector<std::size_t> BatchIndices(std::size_t n_items, std::size_t per_batch,
                                      std::int64_t step, std::uint64_t seed) {
  if (n_items == 0 || per_batch == 0) return {};
  const std::size_t batches = (n_items + per_batch - 1) / per_batch;
  const std::uint64_t s = static_cast<std::uint64_t>(step - 1);
  const std::uint64_t epoch = s / batches;
  const std::size_t pos = static_cast<std::size_t>(s % batches);
  std::vector<std::size_t> perm(n_items);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (epoch + 1)));
  for (std::size_t i = n_items; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng() % i]);
  }
  const std::size_t begin = pos * per_batch;
  const std::size_t end = std::min(n_items, begin + per_batch);
  return {perm.begin() + static_cast<std::ptrdiff_t>(begin),
          perm.begin() + static_cast<std::ptrdiff_t>(end)};
}

namespace {

struct Row {
  const TokenSeq* ids;
  const LossMask* mask;
};

class LogWriter {
 public:
  explicit LogWriter(const std::filesystem::path& out_dir) {
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      out_.open(out_dir / "train_log.jsonl", std::ios::app);
      if (!out_) Fail(ErrorKind::kIo, "cannot open training log in " + out_dir.string());
    }
  }
  void Write(const TrainLogEntry& e) {
    if (!out_.is_open()) return;
    nlohmann::json j;
    j["phase"] = e.phase;
    j["step"] = e.step;
    j["lr"] = e.lr;
    j["loss"] = e.loss;
    if (e.val_ppl) j["val_ppl"] = *e.val_ppl;
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::string StepName(std::int64_t step) {
  std::ostringstream ss;
  ss << "step-" << std::setw(7) << std::setfill('0') << step << ".ckpt";
  return ss.str();
}

using BatchFn = std::vector<Row> (*)(const void*, std::int64_t, const TrainConfig&);
using ValidFn = double (*)(const void*, const Model<float>&);

TrainOutcome RunLoop(const char* phase, Checkpoint state, std::int64_t total_steps,
                     const void* data, BatchFn batch_fn, ValidFn valid_fn,
                     const TrainConfig& config,
                     const std::filesystem::path& out_dir) {
  Model<float> model = state.ToModel();
  if (!state.optimizer) state.optimizer = OptimizerState(model.params().size());
  OptimizerState& opt = *state.optimizer;
  const std::vector<std::uint8_t> decay = model.layout().DecayMask();
  std::vector<float> grads(model.params().size());
  LogWriter writer(out_dir);
  TrainOutcome outcome;

  Checkpoint last_good = state;
  const auto save = [&](const Checkpoint& c, bool periodic) {
    if (out_dir.empty()) return;
    if (periodic) SaveCheckpoint(out_dir / StepName(c.train_step), c);
    SaveCheckpoint(out_dir / "latest.ckpt", c);
  };
  const auto snapshot = [&]() {
    state.params.assign(model.params().begin(), model.params().end());
    return state;
  };

  for (std::int64_t step = state.train_step + 1; step <= total_steps; ++step) {
    const std::vector<Row> rows = batch_fn(data, step, config);
    std::size_t count = 0;
    for (const Row& r : rows) {
      count += static_cast<std::size_t>(
          std::count(r.mask->begin(), r.mask->end(), std::uint8_t{1}));
    }
    if (count == 0) continue;
    std::fill(grads.begin(), grads.end(), 0.0f);
    double nll = 0.0;
    const float scale = 1.0f / static_cast<float>(count);
    for (const Row& r : rows) {
      nll += model.Accumulate(*r.ids, *r.mask, scale, grads.data()).nll;
    }
    const double loss = nll / static_cast<double>(count);
    const double lr = LrAt(step, config);
    if (!std::isfinite(loss)) {
      save(last_good, false);
      Fail(ErrorKind::kNumeric, std::string(phase) + " diverged at step " +
                                    std::to_string(step) +
                                    " (non-finite loss); last good checkpoint is step " +
                                    std::to_string(last_good.train_step));
    }
    AdamWStep(model.params(), grads, decay, opt, lr, config);
    state.train_step = step;

    TrainLogEntry entry{phase, step, lr, loss, std::nullopt};
    const bool periodic = config.checkpoint_every > 0 && step % config.checkpoint_every == 0;
    if (periodic || step == total_steps) {
      if (valid_fn != nullptr) entry.val_ppl = valid_fn(data, model);
      last_good = snapshot();
      save(last_good, periodic);
    }
    writer.Write(entry);
    outcome.log.push_back(entry);
  }
  outcome.checkpoint = snapshot();
  if (total_steps <= last_good.train_step) save(outcome.checkpoint, false);
  return outcome;
}

struct PretrainData {
  std::vector<std::vector<TokenSeq>> blocks;
  std::vector<TokenSeq> valid;
  LossMask full_mask;
  TokenId sos = 0;
};

std::vector<Row> PretrainBatch(const void* p, std::int64_t step, const TrainConfig& c) {
  const auto* d = static_cast<const PretrainData*>(p);
  const std::size_t idx = BatchIndices(d->blocks.size(), 1, step, c.seed).front();
  std::vector<Row> rows;
  for (const TokenSeq& r : d->blocks[idx]) rows.push_back({&r, &d->full_mask});
  return rows;
}

double PretrainValid(const void* p, const Model<float>& model) {
  const auto* d = static_cast<const PretrainData*>(p);
  if (d->valid.empty()) return std::nan("");
  ModelScorer scorer(model);
  return Perplexity(scorer, d->valid, d->sos).ppl;
}

struct FinetuneData {
  std::span<const FinetuneExample> train;
  std::span<const FinetuneExample> valid;
};

std::vector<Row> FinetuneBatch(const void* p, std::int64_t step, const TrainConfig& c) {
  const auto* d = static_cast<const FinetuneData*>(p);
  std::vector<Row> rows;
  for (std::size_t i : BatchIndices(d->train.size(),
                                    static_cast<std::size_t>(c.batch_rows), step, c.seed)) {
    rows.push_back({&d->train[i].ids, &d->train[i].mask});
  }
  return rows;
}

double FinetuneValid(const void* p, const Model<float>& model) {
  const auto* d = static_cast<const FinetuneData*>(p);
  if (d->valid.empty()) return std::nan("");
  return MaskedPerplexity(model, d->valid);
}

}  // namespace

double MaskedPerplexity(const Model<float>& model,
                        std::span<const FinetuneExample> examples) {
  double nll = 0.0;
  std::size_t count = 0;
  for (const FinetuneExample& ex : examples) {
    const auto s = model.Accumulate(ex.ids, ex.mask, 0.0f, nullptr);
    nll += s.nll;
    count += s.count;
  }
  return PerplexityFromNll(nll, count).ppl;
}

TrainOutcome Pretrain(const Checkpoint& start, std::span<const TokenSeq> train_docs,
                      std::span<const TokenSeq> valid_docs, const TrainConfig& config,
                      const std::filesystem::path& out_dir) {
  config.Validate(start.config);
  PretrainData data;
  data.blocks = PackPretrainBatches(train_docs, config.batch_rows, config.seq_len);
  if (data.blocks.empty() && (config.max_steps > 0 || config.epochs > 0)) {
    Fail(ErrorKind::kInvalidArgument, "corpus too small for a single training block");
  }
  const std::size_t ctx = static_cast<std::size_t>(start.config.context);
  for (const TokenSeq& d : valid_docs) {
    data.valid.emplace_back(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(
                                                       std::min(ctx, d.size())));
  }
  if (!data.valid.empty()) data.sos = data.valid.front().front();
  data.full_mask.assign(static_cast<std::size_t>(config.seq_len - 1), 1);
  const std::int64_t total =
      config.max_steps > 0
          ? config.max_steps
          : static_cast<std::int64_t>(config.epochs) *
                static_cast<std::int64_t>(data.blocks.size());
  Checkpoint state = start;
  state.finetuned = false;
  return RunLoop("pretrain", std::move(state), total, &data, &PretrainBatch,
                 &PretrainValid, config, out_dir);
}

TrainOutcome Finetune(const Checkpoint& start, std::span<const FinetuneExample> train,
                      std::span<const FinetuneExample> valid, const TrainConfig& config,
                      std::uint64_t vocab_hash, const std::filesystem::path& out_dir) {
  if (start.vocab_hash != vocab_hash) {
    Fail(ErrorKind::kState,
         "checkpoint was trained with a different vocabulary than the corpus tokenization");
  }
  if (!start.optimizer) {
    Fail(ErrorKind::kState, "fine-tuning needs a checkpoint carrying optimizer state");
  }
  for (const FinetuneExample& ex : train) {
    if (ex.ids.size() > static_cast<std::size_t>(start.config.context)) {
      Fail(ErrorKind::kInvalidArgument, "fine-tuning example exceeds the model context");
    }
  }
  TrainConfig c = config;
  c.seq_len = std::min(c.seq_len, start.config.context);
  c.Validate(start.config);
  FinetuneData data{train, valid};
  const std::size_t per_epoch =
      (train.size() + static_cast<std::size_t>(c.batch_rows) - 1) /
      static_cast<std::size_t>(c.batch_rows);
  const std::int64_t total =
      c.max_steps > 0 ? c.max_steps
                      : static_cast<std::int64_t>(c.epochs) * static_cast<std::int64_t>(per_epoch);
  Checkpoint state = start;
  if (!state.finetuned) state.train_step = 0;
  state.finetuned = true;
  return RunLoop("finetune", std::move(state), total, &data, &FinetuneBatch,
                 &FinetuneValid, c, out_dir);
}

}  // namespace headgen
