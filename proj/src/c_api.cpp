// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/headgen.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/config.hpp"
#include "headgen/corpus.hpp"
#include "headgen/evalkit.hpp"
#include "headgen/gp_tune.hpp"
#include "headgen/headline.hpp"
#include "headgen/metrics.hpp"
#include "headgen/pipeline.hpp"
#include "headgen/synth.hpp"
#include "headgen/tokenizer.hpp"
#include "headgen/trainer.hpp"

struct hg_text {
  std::string value;
};

struct hg_vocab {
  headgen::Vocab vocab;
};

struct hg_model {
  headgen::Vocab vocab;
  headgen::Model<float> model;
  std::unique_ptr<headgen::ModelScorer> scorer;

  hg_model(headgen::Vocab v, headgen::Model<float> m)
      : vocab(std::move(v)), model(std::move(m)),
        scorer(std::make_unique<headgen::ModelScorer>(model)) {}
};

namespace {

using headgen::ErrorKind;
using headgen::Fail;

thread_local std::string g_last_error;

hg_status StatusOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return HG_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return HG_ERR_IO;
    case ErrorKind::kFormat: return HG_ERR_FORMAT;
    case ErrorKind::kNumeric: return HG_ERR_NUMERIC;
    case ErrorKind::kState: return HG_ERR_STATE;
  }
  return HG_ERR_INTERNAL;
}

template <typename F>
hg_status Guard(F&& body) {
  g_last_error.clear();
  try {
    body();
    return HG_OK;
  } catch (const headgen::Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return HG_ERR_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) Fail(ErrorKind::kInvalidArgument, std::string(what) + " must not be NULL");
}

hg_text* MakeText(std::string s) { return new hg_text{std::move(s)}; }

void SetText(hg_text** out, std::string s) {
  if (out != nullptr) *out = MakeText(std::move(s));
}

headgen::RunConfig ConfigOf(const char* json) {
  headgen::RunConfig c;
  if (json != nullptr) c.MergeJson(json);
  c.Validate();
  return c;
}

std::vector<headgen::ArticleRecord> ReadRecords(const char* path) {
  Require(path, "corpus path");
  auto result = headgen::IngestFile(path);
  if (result.skipped > 0) {
    headgen::Warn(std::to_string(result.skipped) + " malformed records skipped in " + path);
  }
  return std::move(result.records);
}

std::vector<headgen::TokenSeq> LmDocs(const std::vector<headgen::ArticleRecord>& records,
                                      const headgen::Vocab& vocab) {
  std::vector<headgen::TokenSeq> docs;
  for (const auto& r : records) {
    docs.push_back(headgen::WrapDocument(vocab.Encode(headgen::PretrainText(r)), vocab));
  }
  return docs;
}

std::vector<headgen::FinetuneExample> HeadlineExamples(
    const std::vector<headgen::ArticleRecord>& records, const headgen::Vocab& vocab) {
  std::vector<headgen::FinetuneExample> out;
  for (const auto& r : headgen::FilterForFinetune(records)) {
    out.push_back(headgen::FormatFinetuneExample(vocab.Encode(r.body), vocab.Encode(*r.title),
                                                 vocab));
  }
  return out;
}

std::string TrainSummary(const char* phase, const headgen::TrainOutcome& o,
                         const std::string& out_dir) {
  std::ostringstream s;
  s << phase << ": steps=" << o.checkpoint.train_step;
  if (!o.log.empty()) {
    s << " final_loss=" << o.log.back().loss;
    for (auto it = o.log.rbegin(); it != o.log.rend(); ++it) {
      if (it->val_ppl) {
        s << " val_ppl=" << *it->val_ppl;
        break;
      }
    }
  }
  s << " checkpoint=" << (std::filesystem::path(out_dir) / "latest.ckpt").string() << "\n";
  return s.str();
}

std::vector<headgen::eval::FilledSheet> OpenSheets(
    const char* const* paths, const char* const* evaluators, size_t n,
    std::vector<std::unique_ptr<std::ifstream>>* streams) {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "no worksheets given");
  Require(paths, "sheet paths");
  std::vector<headgen::eval::FilledSheet> sheets;
  for (size_t i = 0; i < n; ++i) {
    Require(paths[i], "sheet path");
    auto in = std::make_unique<std::ifstream>(paths[i], std::ios::binary);
    if (!*in) Fail(ErrorKind::kIo, std::string("cannot open ") + paths[i]);
    std::string evaluator = evaluators != nullptr && evaluators[i] != nullptr
                                ? std::string(evaluators[i])
                                : std::filesystem::path(paths[i]).stem().string();
    sheets.push_back({evaluator, paths[i], in.get()});
    streams->push_back(std::move(in));
  }
  return sheets;
}

headgen::eval::AnnotationSet Ingest(const char* key_path, const char* const* sheet_paths,
                                    const char* const* evaluators, size_t n,
                                    const char* brands_path) {
  Require(key_path, "key path");
  std::ifstream key_in(key_path, std::ios::binary);
  if (!key_in) Fail(ErrorKind::kIo, std::string("cannot open ") + key_path);
  const auto key = headgen::eval::ReadKey(key_in);
  std::map<std::string, std::string> brands;
  if (brands_path != nullptr) {
    std::ifstream b(brands_path, std::ios::binary);
    if (!b) Fail(ErrorKind::kIo, std::string("cannot open ") + brands_path);
    brands = headgen::eval::ReadBrands(b);
  }
  std::vector<std::unique_ptr<std::ifstream>> streams;
  const auto sheets = OpenSheets(sheet_paths, evaluators, n, &streams);
  return headgen::eval::IngestAnnotations(sheets, key, brands);
}

std::string IngestSummary(const headgen::eval::AnnotationSet& set) {
  std::ostringstream s;
  s << "records=" << set.records.size() << " headlines=" << set.headline_count
    << " missing_rows=" << set.missing_rows << " nesting_fixes=" << set.nesting_fixes << "\n";
  return s.str();
}

template <typename Write>
void WriteFile(const std::filesystem::path& path, Write&& write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  write(out);
  if (!out) Fail(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace

extern "C" {

const char* hg_last_error(void) { return g_last_error.c_str(); }

const char* hg_status_name(hg_status status) {
  switch (status) {
    case HG_OK: return "ok";
    case HG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HG_ERR_IO: return "i/o error";
    case HG_ERR_FORMAT: return "format error";
    case HG_ERR_NUMERIC: return "numeric error";
    case HG_ERR_STATE: return "state error";
    case HG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* hg_version(void) { return "0.1.0"; }

const char* hg_text_data(const hg_text* text) { return text != nullptr ? text->value.c_str() : ""; }
size_t hg_text_size(const hg_text* text) { return text != nullptr ? text->value.size() : 0; }
void hg_text_free(hg_text* text) { delete text; }

hg_status hg_config_resolve(const char* file, const char* const* overrides, size_t n_overrides,
                            hg_text** json) {
  return Guard([&] {
    Require(json, "json");
    std::vector<std::string> ov;
    for (size_t i = 0; i < n_overrides; ++i) {
      Require(overrides[i], "override");
      ov.emplace_back(overrides[i]);
    }
    std::optional<std::filesystem::path> path;
    if (file != nullptr) path = file;
    *json = MakeText(headgen::ResolveRunConfig(path, ov).ToJson());
  });
}

hg_status hg_parameter_table(hg_text** table) {
  return Guard([&] {
    Require(table, "table");
    std::string s;
    for (const auto& p : headgen::ParameterTable()) {
      s += p.key + "\t" + p.desk + "\t" + p.full_scale + "\n";
    }
    *table = MakeText(std::move(s));
  });
}

hg_status hg_corpus_synth(size_t count, uint64_t seed, const char* out_path) {
  return Guard([&] {
    Require(out_path, "output path");
    std::vector<headgen::ArticleRecord> records;
    for (auto& a : headgen::SyntheticCorpus(count, seed)) records.push_back(std::move(a.record));
    headgen::WriteRecordsFile(out_path, records);
  });
}

hg_status hg_corpus_split(const char* in_path, const char* ratios, uint64_t seed,
                          const char* out_dir, hg_text** summary) {
  return Guard([&] {
    Require(out_dir, "output directory");
    const auto records = ReadRecords(in_path);
    const headgen::SplitRatios r =
        ratios != nullptr ? headgen::ParseRatios(ratios) : headgen::SplitRatios{};
    const auto split = headgen::Split(records, r, seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    headgen::WriteRecordsFile(dir / "train.jsonl", split.train);
    headgen::WriteRecordsFile(dir / "valid.jsonl", split.valid);
    headgen::WriteRecordsFile(dir / "test.jsonl", split.test);
    SetText(summary, "train=" + std::to_string(split.train.size()) +
                         " valid=" + std::to_string(split.valid.size()) +
                         " test=" + std::to_string(split.test.size()) + "\n");
  });
}

hg_status hg_corpus_filter(const char* in_path, const char* non_news_tags, const char* out_path,
                           hg_text** summary) {
  return Guard([&] {
    Require(out_path, "output path");
    const auto records = ReadRecords(in_path);
    std::vector<std::string> tags;
    if (non_news_tags != nullptr) {
      std::stringstream ss(non_news_tags);
      for (std::string t; std::getline(ss, t, ',');) {
        if (!t.empty()) tags.push_back(t);
      }
    }
    const auto kept = headgen::FilterForFinetune(records, tags);
    headgen::WriteRecordsFile(out_path, kept);
    SetText(summary, "kept=" + std::to_string(kept.size()) +
                         " dropped=" + std::to_string(records.size() - kept.size()) + "\n");
  });
}

hg_status hg_vocab_learn(const char* corpus_path, size_t target, hg_vocab** out) {
  return Guard([&] {
    Require(out, "out");
    std::vector<std::string> docs;
    for (const auto& r : ReadRecords(corpus_path)) docs.push_back(headgen::PretrainText(r));
    *out = new hg_vocab{headgen::Vocab::Learn(docs, target)};
  });
}

hg_status hg_vocab_load(const char* path, hg_vocab** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new hg_vocab{headgen::Vocab::Load(path)};
  });
}

hg_status hg_vocab_save(const hg_vocab* vocab, const char* path) {
  return Guard([&] {
    Require(vocab, "vocab");
    Require(path, "path");
    vocab->vocab.Save(path);
  });
}

size_t hg_vocab_size(const hg_vocab* vocab) { return vocab != nullptr ? vocab->vocab.size() : 0; }

hg_status hg_vocab_encode(const hg_vocab* vocab, const char* text, size_t length, int32_t** ids,
                          size_t* n_ids) {
  return Guard([&] {
    Require(vocab, "vocab");
    Require(ids, "ids");
    Require(n_ids, "n_ids");
    if (text == nullptr && length > 0) Fail(ErrorKind::kInvalidArgument, "text must not be NULL");
    const auto seq = vocab->vocab.Encode(std::string_view(text != nullptr ? text : "", length));
    auto* buf = static_cast<int32_t*>(std::malloc(std::max<size_t>(seq.size(), 1) * sizeof(int32_t)));
    if (buf == nullptr) throw std::bad_alloc();
    std::copy(seq.begin(), seq.end(), buf);
    *ids = buf;
    *n_ids = seq.size();
  });
}

void hg_ids_free(int32_t* ids) { std::free(ids); }

hg_status hg_vocab_decode(const hg_vocab* vocab, const int32_t* ids, size_t n_ids,
                          hg_text** text) {
  return Guard([&] {
    Require(vocab, "vocab");
    Require(text, "text");
    if (ids == nullptr && n_ids > 0) Fail(ErrorKind::kInvalidArgument, "ids must not be NULL");
    *text = MakeText(vocab->vocab.Decode(std::span<const int32_t>(ids, n_ids)));
  });
}

hg_status hg_vocab_special_id(const hg_vocab* vocab, const char* name, int32_t* id) {
  return Guard([&] {
    Require(vocab, "vocab");
    Require(name, "name");
    Require(id, "id");
    *id = vocab->vocab.SpecialId(name);
  });
}

void hg_vocab_free(hg_vocab* vocab) { delete vocab; }

hg_status hg_train_pretrain(const char* config_json, const char* vocab_path,
                            const char* train_path, const char* valid_path,
                            const char* init_ckpt, const char* out_dir, hg_text** summary) {
  return Guard([&] {
    Require(vocab_path, "vocab path");
    Require(out_dir, "output directory");
    const auto config = ConfigOf(config_json);
    const auto vocab = headgen::Vocab::Load(vocab_path);
    const auto train = LmDocs(ReadRecords(train_path), vocab);
    const auto valid = LmDocs(ReadRecords(valid_path), vocab);
    headgen::Checkpoint start;
    if (init_ckpt != nullptr) {
      start = headgen::LoadCheckpoint(init_ckpt);
      if (start.vocab_hash != vocab.Hash()) {
        Fail(ErrorKind::kState, "checkpoint was trained with a different vocabulary");
      }
    } else {
      start = headgen::Checkpoint::FromModel(
          headgen::Model<float>::Init(config.SeededModel(static_cast<int>(vocab.size()))),
          vocab.Hash());
    }
    std::filesystem::create_directories(out_dir);
    WriteFile(std::filesystem::path(out_dir) / "config.json",
              [&](std::ostream& o) { o << config.ToJson(); });
    const auto outcome =
        headgen::Pretrain(start, train, valid, config.SeededPretrain(), out_dir);
    SetText(summary, TrainSummary("pretrain", outcome, out_dir));
  });
}

hg_status hg_train_finetune(const char* config_json, const char* vocab_path,
                            const char* ckpt_path, const char* train_path,
                            const char* valid_path, const char* out_dir, hg_text** summary) {
  return Guard([&] {
    Require(vocab_path, "vocab path");
    Require(ckpt_path, "checkpoint path");
    Require(out_dir, "output directory");
    const auto config = ConfigOf(config_json);
    const auto vocab = headgen::Vocab::Load(vocab_path);
    const auto start = headgen::LoadCheckpoint(ckpt_path);
    const auto train = HeadlineExamples(ReadRecords(train_path), vocab);
    const auto valid = HeadlineExamples(ReadRecords(valid_path), vocab);
    std::filesystem::create_directories(out_dir);
    WriteFile(std::filesystem::path(out_dir) / "config.json",
              [&](std::ostream& o) { o << config.ToJson(); });
    const auto outcome = headgen::Finetune(start, train, valid, config.SeededFinetune(),
                                           vocab.Hash(), out_dir);
    SetText(summary, TrainSummary("finetune", outcome, out_dir));
  });
}

hg_status hg_model_load(const char* ckpt_path, const hg_vocab* vocab, hg_model** out) {
  return Guard([&] {
    Require(ckpt_path, "checkpoint path");
    Require(vocab, "vocab");
    Require(out, "out");
    const auto ckpt = headgen::LoadCheckpoint(ckpt_path);
    if (ckpt.vocab_hash != vocab->vocab.Hash()) {
      Fail(ErrorKind::kState, "checkpoint was trained with a different vocabulary");
    }
    *out = new hg_model(vocab->vocab, ckpt.ToModel());
  });
}

void hg_model_free(hg_model* model) { delete model; }

hg_status hg_generate(hg_model* model, const char* config_json, hg_algo algo, const char* body,
                      hg_text** headlines) {
  return Guard([&] {
    Require(model, "model");
    Require(body, "body");
    Require(headlines, "headlines");
    const auto config = ConfigOf(config_json);
    headgen::DecodeAlgo a;
    switch (algo) {
      case HG_ALGO_GREEDY: a = headgen::DecodeAlgo::kGreedy; break;
      case HG_ALGO_SAMPLE: a = headgen::DecodeAlgo::kSample; break;
      case HG_ALGO_BEAM: a = headgen::DecodeAlgo::kBeam; break;
      case HG_ALGO_DBS: a = headgen::DecodeAlgo::kDbs; break;
      default: Fail(ErrorKind::kInvalidArgument, "unknown decoding algorithm");
    }
    std::string out;
    for (const auto& h : headgen::GenerateHeadlines(*model->scorer, model->vocab, body,
                                                    config.SeededDecode(), a)) {
      std::string line = h.text;
      for (char& c : line) {
        if (c == '\n' || c == '\r') c = ' ';
      }
      out += line + "\n";
    }
    *headlines = MakeText(std::move(out));
  });
}

hg_status hg_tune(hg_model* model, const char* config_json, const char* articles_path,
                  const char* trace_path, hg_text** summary) {
  return Guard([&] {
    Require(model, "model");
    const auto config = ConfigOf(config_json);
    std::vector<headgen::HeadlineExample> examples;
    for (const auto& r : headgen::FilterForFinetune(ReadRecords(articles_path))) {
      examples.push_back({r.body, *r.title});
    }
    if (examples.empty()) Fail(ErrorKind::kInvalidArgument, "no titled articles to tune on");
    const headgen::DecodeConfig base = config.SeededDecode();
    const headgen::Objective objective = [&](std::span<const double> x) {
      headgen::DecodeConfig d = base;
      d.diversity_penalty = x[0];
      d.repetition_penalty = x[1];
      d.length_decay = x[2];
      return headgen::MeanSetBleu(*model->scorer, model->vocab, examples, d);
    };
    const auto result = headgen::Tune(objective, headgen::Bounds::DecodingDefaults(),
                                      config.tune.budget, config.tune.n_init, config.seed);
    if (trace_path != nullptr) {
      WriteFile(trace_path, [&](std::ostream& o) { headgen::WriteTrace(o, result.trace); });
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "best: diversity=%.4f repetition=%.4f length_decay=%.4f bleu=%.6f "
                  "(%zu evaluations, %zu articles)\n",
                  result.best_point[0], result.best_point[1], result.best_point[2],
                  result.best_value, result.trace.size(), examples.size());
    SetText(summary, buf);
  });
}

hg_status hg_perplexity(hg_model* model, const char* docs_path, hg_ppl_mode mode, double* ppl,
                        size_t* tokens) {
  return Guard([&] {
    Require(model, "model");
    Require(ppl, "ppl");
    const auto records = ReadRecords(docs_path);
    if (mode == HG_PPL_LANGUAGE_MODEL) {
      const auto docs = LmDocs(records, model->vocab);
      const auto report = headgen::Perplexity(*model->scorer, docs, model->vocab.sos());
      model->scorer->Clear();
      *ppl = report.ppl;
      if (tokens != nullptr) *tokens = report.token_count;
    } else if (mode == HG_PPL_HEADLINE) {
      const auto examples = HeadlineExamples(records, model->vocab);
      if (examples.empty()) Fail(ErrorKind::kInvalidArgument, "no titled articles");
      *ppl = headgen::MaskedPerplexity(model->model, examples);
      if (tokens != nullptr) {
        size_t n = 0;
        for (const auto& e : examples) n += static_cast<size_t>(std::count(e.mask.begin(), e.mask.end(), 1));
        *tokens = n;
      }
    } else {
      Fail(ErrorKind::kInvalidArgument, "unknown perplexity mode");
    }
  });
}

hg_status hg_bleu(const hg_vocab* vocab, const char* hypothesis, const char* reference,
                  double* score) {
  return Guard([&] {
    Require(hypothesis, "hypothesis");
    Require(reference, "reference");
    Require(score, "score");
    if (vocab != nullptr) {
      *score = headgen::SentenceBleu(vocab->vocab.Encode(hypothesis),
                                     vocab->vocab.Encode(reference))
                   .value;
    } else {
      *score = headgen::SentenceBleuWords(hypothesis, reference).value;
    }
  });
}

hg_status hg_eval_worksheet(hg_model* model, const char* config_json, const char* articles_path,
                            const char* out_dir, hg_text** summary) {
  return Guard([&] {
    Require(model, "model");
    Require(out_dir, "output directory");
    const auto config = ConfigOf(config_json);
    const auto decode = config.SeededDecode();
    std::vector<headgen::eval::WorksheetArticle> articles;
    std::vector<std::pair<std::string, std::string>> brands;
    for (const auto& r : headgen::FilterForFinetune(ReadRecords(articles_path))) {
      headgen::eval::WorksheetArticle a{r.id, r.body, {}, *r.title};
      for (const auto& h : headgen::GenerateHeadlines(*model->scorer, model->vocab, r.body,
                                                      decode, headgen::DecodeAlgo::kDbs)) {
        a.generated.push_back(h.text);
      }
      if (a.generated.size() != static_cast<size_t>(headgen::eval::kGeneratedPerArticle)) {
        Fail(ErrorKind::kInvalidArgument, "worksheets need decode.groups = 4");
      }
      brands.emplace_back(r.id, r.brand.value_or(""));
      articles.push_back(std::move(a));
    }
    const auto build = headgen::eval::BuildWorksheet(articles, config.seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    WriteFile(dir / "config.json", [&](std::ostream& o) { o << config.ToJson(); });
    WriteFile(dir / "worksheet.csv",
              [&](std::ostream& o) { headgen::eval::WriteWorksheet(o, build.rows); });
    WriteFile(dir / "key.csv", [&](std::ostream& o) { headgen::eval::WriteKey(o, build.key); });
    WriteFile(dir / "brands.csv", [&](std::ostream& o) {
      o << "article_id,brand\n";
      for (const auto& [id, brand] : brands) o << id << "," << brand << "\n";
    });
    SetText(summary, "articles=" + std::to_string(articles.size()) +
                         " rows=" + std::to_string(build.rows.size()) + "\n");
  });
}

hg_status hg_eval_ingest(const char* key_path, const char* const* sheet_paths,
                         const char* const* evaluators, size_t n_sheets, const char* brands_path,
                         const char* out_path, hg_text** summary) {
  return Guard([&] {
    Require(out_path, "output path");
    const auto set = Ingest(key_path, sheet_paths, evaluators, n_sheets, brands_path);
    WriteFile(out_path, [&](std::ostream& o) { headgen::eval::WriteAnnotations(o, set); });
    SetText(summary, IngestSummary(set));
  });
}

hg_status hg_eval_report(const char* key_path, const char* const* sheet_paths,
                         const char* const* evaluators, size_t n_sheets, const char* brands_path,
                         const char* out_dir, hg_text** summary) {
  return Guard([&] {
    Require(out_dir, "output directory");
    const auto set = Ingest(key_path, sheet_paths, evaluators, n_sheets, brands_path);
    const auto report = headgen::eval::BuildReport(set);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    WriteFile(dir / "evaluators.csv",
              [&](std::ostream& o) { headgen::eval::WriteRatesTable(o, report.per_evaluator); });
    WriteFile(dir / "kappa.csv",
              [&](std::ostream& o) { headgen::eval::WriteKappaTable(o, report.kappa); });
    WriteFile(dir / "brands.csv",
              [&](std::ostream& o) { headgen::eval::WriteRatesTable(o, report.per_brand); });
    WriteFile(dir / "summary.csv",
              [&](std::ostream& o) { headgen::eval::WriteRatesTable(o, report.summary); });
    SetText(summary, IngestSummary(set) + "complete_headlines=" +
                         std::to_string(report.complete_headlines) + "\n");
  });
}

hg_status hg_pipeline_demo(const char* config_json, const char* out_dir, hg_text** report) {
  return Guard([&] {
    Require(report, "report");
    const auto config = ConfigOf(config_json);
    const auto result = headgen::RunPipeline(
        config, out_dir != nullptr ? std::filesystem::path(out_dir) : std::filesystem::path(),
        [](const std::string& stage) { std::fprintf(stderr, "[pipeline] %s\n", stage.c_str()); });
    *report = MakeText(result.report);
  });
}

}  // extern "C"
