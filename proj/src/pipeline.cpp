// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/pipeline.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "headgen/common.hpp"
#include "headgen/evalkit.hpp"
#include "headgen/gp_tune.hpp"
#include "headgen/headline.hpp"
#include "headgen/synth.hpp"
#include "headgen/trainer.hpp"

namespace headgen {
namespace {

bool IsWordByte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename F>
auto Stage(const char* name, const ProgressFn& progress, F&& body) {
  if (progress) progress(std::string("stage ") + name);
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + name + "' failed: " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kState, std::string("stage '") + name + "' failed: " + e.what());
  }
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
}

}  // namespace

bool ContainsEntity(std::string_view text, std::string_view entity) {
  if (entity.empty()) return false;
  for (std::size_t pos = text.find(entity); pos != std::string_view::npos;
       pos = text.find(entity, pos + 1)) {
    const bool left = pos == 0 || !IsWordByte(text[pos - 1]);
    const std::size_t end = pos + entity.size();
    const bool right = end == text.size() || !IsWordByte(text[end]);
    if (left && right) return true;
  }
  return false;
}

PipelineResult RunPipeline(const RunConfig& config, const std::filesystem::path& out_dir,
                           const ProgressFn& progress) {
  config.Validate();
  const bool write = !out_dir.empty();
  if (write) {
    std::filesystem::create_directories(out_dir);
    WriteText(out_dir / "config.json", config.ToJson());
  }
  PipelineResult res;

  // Corpus.
  std::map<std::string, std::string> entity_of;
  std::map<std::string, std::string> brand_of;
  const CorpusSplit split = Stage("corpus", progress, [&] {
    const auto synth = SyntheticCorpus(config.corpus.articles, config.seed);
    std::vector<ArticleRecord> records;
    for (const auto& a : synth) {
      entity_of[a.record.id] = a.entity;
      brand_of[a.record.id] = a.record.brand.value_or("");
      records.push_back(a.record);
    }
    if (write) WriteRecordsFile(out_dir / "corpus.jsonl", records);
    return Split(records, config.corpus.split, config.seed);
  });
  res.articles = config.corpus.articles;
  res.train = split.train.size();
  res.valid = split.valid.size();
  res.test = split.test.size();

  // Tokenizer.
  const Vocab vocab = Stage("tokenizer", progress, [&] {
    std::vector<std::string> docs;
    for (const auto& r : split.train) docs.push_back(PretrainText(r));
    Vocab v = Vocab::Learn(docs, config.tokenizer.target);
    if (write) v.Save(out_dir / "vocab.txt");
    return v;
  });
  res.vocab_size = vocab.size();

  // Pre-training.
  const TrainOutcome pre = Stage("pretrain", progress, [&] {
    std::vector<TokenSeq> train_docs, valid_docs;
    for (const auto& r : split.train) train_docs.push_back(WrapDocument(vocab.Encode(PretrainText(r)), vocab));
    for (const auto& r : split.valid) valid_docs.push_back(WrapDocument(vocab.Encode(PretrainText(r)), vocab));
    const Model<float> init =
        Model<float>::Init(config.SeededModel(static_cast<int>(vocab.size())));
    const Checkpoint start = Checkpoint::FromModel(init, vocab.Hash());
    return Pretrain(start, train_docs, valid_docs, config.SeededPretrain(),
                    write ? out_dir / "pretrain" : std::filesystem::path());
  });
  res.parameters = pre.checkpoint.params.size();
  res.pretrain_steps = pre.checkpoint.train_step;
  for (const auto& e : pre.log) {
    if (e.val_ppl) res.pretrain_val_ppl = *e.val_ppl;
  }

  // Fine-tuning.
  const auto make_examples = [&](const std::vector<ArticleRecord>& recs) {
    std::vector<FinetuneExample> out;
    for (const auto& r : recs) {
      out.push_back(FormatFinetuneExample(vocab.Encode(r.body), vocab.Encode(*r.title), vocab));
    }
    return out;
  };
  const TrainOutcome fine = Stage("finetune", progress, [&] {
    return Finetune(pre.checkpoint, make_examples(split.train), make_examples(split.valid),
                    config.SeededFinetune(), vocab.Hash(),
                    write ? out_dir / "finetune" : std::filesystem::path());
  });
  res.finetune_steps = fine.checkpoint.train_step;
  for (const auto& e : fine.log) {
    if (e.val_ppl) res.finetune_val_ppl = *e.val_ppl;
  }
  const Model<float> model = fine.checkpoint.ToModel();
  ModelScorer scorer(model);
  const DecodeConfig decode = config.SeededDecode();

  // Decoding search.
  Stage("tune", progress, [&] {
    std::vector<HeadlineExample> tune_set;
    for (std::size_t i = 0; i < split.valid.size() && i < config.tune.articles; ++i) {
      tune_set.push_back({split.valid[i].body, *split.valid[i].title});
    }
    const Objective objective = [&](std::span<const double> x) {
      DecodeConfig d = decode;
      d.diversity_penalty = x[0];
      d.repetition_penalty = x[1];
      d.length_decay = x[2];
      return MeanSetBleu(scorer, vocab, tune_set, d);
    };
    const TuneResult tuned = Tune(objective, Bounds::DecodingDefaults(), config.tune.budget,
                                  config.tune.n_init, config.seed);
    res.tuned_point = tuned.best_point;
    res.tuned_bleu = tuned.best_value;
    res.default_bleu = MeanSetBleu(scorer, vocab, tune_set, decode);
    if (write) {
      std::ofstream trace(out_dir / "tune_trace.jsonl");
      WriteTrace(trace, tuned.trace);
    }
    return 0;
  });

  // Held-out generation and worksheet.
  std::ostringstream samples;
  Stage("generate", progress, [&] {
    std::vector<eval::WorksheetArticle> sheet;
    std::size_t distinct = 0, first_tokens = 0, tokens = 0, headlines = 0;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      const ArticleRecord& r = split.test[i];
      const auto set = GenerateHeadlines(scorer, vocab, r.body, decode, DecodeAlgo::kDbs);
      const std::string& entity = entity_of.at(r.id);
      bool hit = false;
      std::set<std::string> texts;
      std::set<TokenId> firsts;
      eval::WorksheetArticle wa{r.id, r.body, {}, *r.title};
      for (const auto& h : set) {
        hit = hit || ContainsEntity(h.text, entity);
        texts.insert(h.text);
        if (!h.ids.empty()) firsts.insert(h.ids.front());
        tokens += h.ids.size();
        ++headlines;
        wa.generated.push_back(h.text);
      }
      res.entity_hits += hit ? 1 : 0;
      distinct += texts.size();
      first_tokens += firsts.size();
      if (i < 3) {
        samples << "  " << r.id << " [" << entity << "] real: " << *r.title << "\n";
        for (const auto& h : set) samples << "    - " << h.text << "\n";
      }
      sheet.push_back(std::move(wa));
    }
    const double n = static_cast<double>(std::max<std::size_t>(split.test.size(), 1));
    res.entity_match_rate = static_cast<double>(res.entity_hits) / n;
    res.mean_distinct_headlines = static_cast<double>(distinct) / n;
    res.mean_distinct_first_tokens = static_cast<double>(first_tokens) / n;
    res.mean_headline_tokens =
        static_cast<double>(tokens) / static_cast<double>(std::max<std::size_t>(headlines, 1));
    if (write) {
      const auto build = eval::BuildWorksheet(sheet, config.seed);
      std::ofstream ws(out_dir / "worksheet.csv", std::ios::binary);
      eval::WriteWorksheet(ws, build.rows);
      std::ofstream key(out_dir / "key.csv", std::ios::binary);
      eval::WriteKey(key, build.key);
      std::ofstream brands(out_dir / "brands.csv", std::ios::binary);
      brands << "article_id,brand\n";
      for (const auto& a : sheet) brands << a.id << "," << brand_of.at(a.id) << "\n";
    }
    return 0;
  });

  std::ostringstream rep;
  const double threshold = static_cast<double>(res.vocab_size) / 10.0;
  rep << "headgen pipeline report\n"
      << "seed: " << config.seed << "\n"
      << "articles: " << res.articles << " (train " << res.train << ", valid " << res.valid
      << ", test " << res.test << ")\n"
      << "vocab_size: " << res.vocab_size << "\n"
      << "model: layers=" << config.model.n_layers << " d_model=" << config.model.d_model
      << " heads=" << config.model.n_heads << " parameters=" << res.parameters << "\n"
      << "pretrain_steps: " << res.pretrain_steps << "\n"
      << "pretrain_val_ppl: " << Fixed(res.pretrain_val_ppl) << "\n"
      << "ppl_threshold_v_over_10: " << Fixed(threshold) << "\n"
      << "finetune_steps: " << res.finetune_steps << "\n"
      << "finetune_val_ppl: " << Fixed(res.finetune_val_ppl) << "\n"
      << "tune_budget: " << config.tune.budget << " on " << config.tune.articles
      << " validation articles\n"
      << "tuned_point: diversity=" << Fixed(res.tuned_point[0], 4)
      << " repetition=" << Fixed(res.tuned_point[1], 4)
      << " length_decay=" << Fixed(res.tuned_point[2], 4) << "\n"
      << "tuned_bleu: " << Fixed(res.tuned_bleu) << "\n"
      << "default_bleu: " << Fixed(res.default_bleu) << "\n"
      << "decode: groups=" << decode.groups << " beams_per_group=" << decode.beams_per_group
      << " diversity=" << Fixed(decode.diversity_penalty, 4)
      << " repetition=" << Fixed(decode.repetition_penalty, 4)
      << " length_decay=" << Fixed(decode.length_decay, 4) << "\n"
      << "entity_match: " << res.entity_hits << "/" << res.test << " = "
      << Fixed(res.entity_match_rate, 4) << "\n"
      << "mean_distinct_headlines_per_set: " << Fixed(res.mean_distinct_headlines, 4) << "\n"
      << "mean_distinct_first_tokens_per_set: " << Fixed(res.mean_distinct_first_tokens, 4)
      << "\n"
      << "mean_headline_tokens: " << Fixed(res.mean_headline_tokens, 4) << "\n"
      << "samples:\n"
      << samples.str();
  res.report = rep.str();
  if (write) WriteText(out_dir / "report.txt", res.report);
  return res;
}

}  // namespace headgen
