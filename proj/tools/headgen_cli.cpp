// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "headgen/headgen.h"

namespace {

constexpr int kUsageExit = 2;

struct Failure {
  std::string message;
};

void Check(hg_status s, const char* what) {
  if (s != HG_OK) {
    throw Failure{std::string(what) + ": " + hg_status_name(s) + ": " + hg_last_error()};
  }
}

struct TextDeleter {
  void operator()(hg_text* t) const { hg_text_free(t); }
};
using Text = std::unique_ptr<hg_text, TextDeleter>;

struct VocabDeleter {
  void operator()(hg_vocab* v) const { hg_vocab_free(v); }
};
using VocabPtr = std::unique_ptr<hg_vocab, VocabDeleter>;

struct ModelDeleter {
  void operator()(hg_model* m) const { hg_model_free(m); }
};
using ModelPtr = std::unique_ptr<hg_model, ModelDeleter>;

void Print(const Text& t) { std::fwrite(hg_text_data(t.get()), 1, hg_text_size(t.get()), stdout); }

// Options shared by every command that consumes a run configuration.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;

  void Attach(CLI::App* app) {
    app->add_option("--config", file, "Run configuration file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override one setting, section.key=value (repeatable)");
    app->add_option("--seed", seed, "Seed for every random choice")->check(CLI::NonNegativeNumber);
  }

  std::string Resolve(const std::vector<std::string>& extra = {}) const {
    std::vector<std::string> all = extra;
    all.insert(all.end(), overrides.begin(), overrides.end());
    if (seed >= 0) all.push_back("seed=" + std::to_string(seed));
    std::vector<const char*> ptrs;
    for (const auto& s : all) ptrs.push_back(s.c_str());
    hg_text* out = nullptr;
    Check(hg_config_resolve(file.empty() ? nullptr : file.c_str(), ptrs.data(), ptrs.size(), &out),
          "config");
    Text t(out);
    return hg_text_data(t.get());
  }
};

VocabPtr LoadVocab(const std::string& path) {
  hg_vocab* v = nullptr;
  Check(hg_vocab_load(path.c_str(), &v), "vocab");
  return VocabPtr(v);
}

ModelPtr LoadModel(const std::string& ckpt, const hg_vocab* vocab) {
  hg_model* m = nullptr;
  Check(hg_model_load(ckpt.c_str(), vocab, &m), "checkpoint");
  return ModelPtr(m);
}

std::string ReadAll(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string DefaultsTable() {
  hg_text* out = nullptr;
  if (hg_parameter_table(&out) != HG_OK) return "";
  Text t(out);
  std::ostringstream s;
  s << "Defaults (desk scale vs. published full scale; n/r = not reported):\n";
  char line[160];
  std::snprintf(line, sizeof line, "  %-28s %-10s %s\n", "setting", "desk", "full-scale");
  s << line;
  std::istringstream rows(hg_text_data(t.get()));
  for (std::string row; std::getline(rows, row);) {
    std::istringstream f(row);
    std::string key, desk, full_scale;
    std::getline(f, key, '\t');
    std::getline(f, desk, '\t');
    std::getline(f, full_scale, '\t');
    std::snprintf(line, sizeof line, "  %-28s %-10s %s\n", key.c_str(), desk.c_str(), full_scale.c_str());
    s << line;
  }
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"headgen: headline generation with a small GPT-style model"};
  app.require_subcommand(1);
  app.footer(DefaultsTable());
  std::function<void()> action;

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Create, split and filter article corpora");
  corpus->require_subcommand(1);
  std::string c_in, c_out, c_ratios = "0.8,0.1,0.1", c_tags;
  std::size_t c_count = 640;
  std::uint64_t c_seed = 0;
  auto* synth = corpus->add_subcommand("synth", "Write a synthetic corpus with planted entities");
  synth->add_option("--count", c_count, "Number of articles");
  synth->add_option("--seed", c_seed, "Seed");
  synth->add_option("--out", c_out, "Output JSONL")->required();
  synth->callback([&] {
    action = [&] { Check(hg_corpus_synth(c_count, c_seed, c_out.c_str()), "corpus synth"); };
  });
  auto* split = corpus->add_subcommand("split", "Seeded train/valid/test split");
  split->add_option("--in", c_in, "Input JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--ratios", c_ratios, "train,valid,test ratios");
  split->add_option("--seed", c_seed, "Seed");
  split->add_option("--out-dir", c_out, "Output directory")->required();
  split->callback([&] {
    action = [&] {
      hg_text* s = nullptr;
      Check(hg_corpus_split(c_in.c_str(), c_ratios.c_str(), c_seed, c_out.c_str(), &s), "corpus split");
      Print(Text(s));
    };
  });
  auto* filter = corpus->add_subcommand("filter", "Keep titled news records for fine-tuning");
  filter->add_option("--in", c_in, "Input JSONL")->required()->check(CLI::ExistingFile);
  filter->add_option("--non-news-tags", c_tags, "Comma-separated tags to drop");
  filter->add_option("--out", c_out, "Output JSONL")->required();
  filter->callback([&] {
    action = [&] {
      hg_text* s = nullptr;
      Check(hg_corpus_filter(c_in.c_str(), c_tags.c_str(), c_out.c_str(), &s), "corpus filter");
      Print(Text(s));
    };
  });

  // tokenizer
  auto* tok = app.add_subcommand("tokenizer", "Learn and apply the byte-level BPE vocabulary");
  tok->require_subcommand(1);
  std::string t_in, t_out, t_vocab, t_text, t_ids;
  std::size_t t_target = 1024;
  auto* learn = tok->add_subcommand("learn", "Learn merges up to a target vocabulary size");
  learn->add_option("--target", t_target, "Total vocabulary size including specials");
  learn->add_option("--in", t_in, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  learn->add_option("--out", t_out, "Vocabulary file")->required();
  learn->callback([&] {
    action = [&] {
      hg_vocab* v = nullptr;
      Check(hg_vocab_learn(t_in.c_str(), t_target, &v), "tokenizer learn");
      VocabPtr vocab(v);
      Check(hg_vocab_save(vocab.get(), t_out.c_str()), "tokenizer save");
      std::printf("vocab_size=%zu\n", hg_vocab_size(vocab.get()));
    };
  });
  auto* encode = tok->add_subcommand("encode", "Print token ids of text (stdin when --text is absent)");
  encode->add_option("--vocab", t_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  encode->add_option("--text", t_text, "Text to encode");
  encode->callback([&] {
    action = [&] {
      auto vocab = LoadVocab(t_vocab);
      const std::string text = encode->count("--text") ? t_text : ReadAll(std::cin);
      int32_t* ids = nullptr;
      std::size_t n = 0;
      Check(hg_vocab_encode(vocab.get(), text.data(), text.size(), &ids, &n), "encode");
      for (std::size_t i = 0; i < n; ++i) std::printf(i ? " %d" : "%d", ids[i]);
      std::printf("\n");
      hg_ids_free(ids);
    };
  });
  auto* decode = tok->add_subcommand("decode", "Print the text of space-separated token ids");
  decode->add_option("--vocab", t_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  decode->add_option("--ids", t_ids, "Token ids")->required();
  decode->callback([&] {
    action = [&] {
      auto vocab = LoadVocab(t_vocab);
      std::vector<int32_t> ids;
      std::istringstream in(t_ids);
      for (long v; in >> v;) ids.push_back(static_cast<int32_t>(v));
      if (!in.eof()) throw Failure{"decode: ids must be integers"};
      hg_text* s = nullptr;
      Check(hg_vocab_decode(vocab.get(), ids.data(), ids.size(), &s), "decode");
      Print(Text(s));
      std::printf("\n");
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Pre-train or fine-tune a model");
  train->require_subcommand(1);
  ConfigOptions tr_cfg;
  std::string tr_vocab, tr_train, tr_valid, tr_init, tr_ckpt, tr_out;
  auto* pre = train->add_subcommand("pretrain", "Next-token training on packed documents");
  pre->add_option("--vocab", tr_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  pre->add_option("--train", tr_train, "Training JSONL")->required()->check(CLI::ExistingFile);
  pre->add_option("--valid", tr_valid, "Validation JSONL")->required()->check(CLI::ExistingFile);
  pre->add_option("--init", tr_init, "Resume from this checkpoint")->check(CLI::ExistingFile);
  pre->add_option("--out-dir", tr_out, "Checkpoint directory")->required();
  tr_cfg.Attach(pre);
  pre->callback([&] {
    action = [&] {
      const std::string cfg = tr_cfg.Resolve();
      hg_text* s = nullptr;
      Check(hg_train_pretrain(cfg.c_str(), tr_vocab.c_str(), tr_train.c_str(), tr_valid.c_str(),
                              tr_init.empty() ? nullptr : tr_init.c_str(), tr_out.c_str(), &s),
            "pretrain");
      Print(Text(s));
    };
  });
  ConfigOptions ft_cfg;
  auto* fine = train->add_subcommand("finetune", "Headline fine-tuning from a pre-trained checkpoint");
  fine->add_option("--vocab", tr_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  fine->add_option("--ckpt", tr_ckpt, "Pre-trained checkpoint")->required()->check(CLI::ExistingFile);
  fine->add_option("--train", tr_train, "Training JSONL")->required()->check(CLI::ExistingFile);
  fine->add_option("--valid", tr_valid, "Validation JSONL")->required()->check(CLI::ExistingFile);
  fine->add_option("--out-dir", tr_out, "Checkpoint directory")->required();
  ft_cfg.Attach(fine);
  fine->callback([&] {
    action = [&] {
      const std::string cfg = ft_cfg.Resolve();
      hg_text* s = nullptr;
      Check(hg_train_finetune(cfg.c_str(), tr_vocab.c_str(), tr_ckpt.c_str(), tr_train.c_str(),
                              tr_valid.c_str(), tr_out.c_str(), &s),
            "finetune");
      Print(Text(s));
    };
  });

  // generate
  auto* gen = app.add_subcommand("generate", "Generate headlines for one article body");
  ConfigOptions g_cfg;
  std::string g_ckpt, g_vocab, g_body, g_algo = "dbs";
  bool g_stdin = false;
  gen->add_option("--ckpt", g_ckpt, "Fine-tuned checkpoint")->required()->check(CLI::ExistingFile);
  gen->add_option("--vocab", g_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  auto* body_opt = gen->add_option("--body-file", g_body, "Article body")->check(CLI::ExistingFile);
  auto* stdin_opt = gen->add_flag("--stdin", g_stdin, "Read the body from stdin");
  body_opt->excludes(stdin_opt);
  gen->add_option("--algo", g_algo, "greedy, sample, beam or dbs")
      ->check(CLI::IsMember({"greedy", "sample", "beam", "dbs"}));
  g_cfg.Attach(gen);
  gen->callback([&] {
    action = [&] {
      if (g_body.empty() && !g_stdin) throw Failure{"generate: pass --body-file or --stdin"};
      std::string body;
      if (g_stdin) {
        body = ReadAll(std::cin);
      } else {
        std::ifstream in(g_body, std::ios::binary);
        body = ReadAll(in);
      }
      const std::string cfg = g_cfg.Resolve();
      auto vocab = LoadVocab(g_vocab);
      auto model = LoadModel(g_ckpt, vocab.get());
      const hg_algo algo = g_algo == "greedy" ? HG_ALGO_GREEDY
                           : g_algo == "sample" ? HG_ALGO_SAMPLE
                           : g_algo == "beam"   ? HG_ALGO_BEAM
                                                : HG_ALGO_DBS;
      hg_text* s = nullptr;
      Check(hg_generate(model.get(), cfg.c_str(), algo, body.c_str(), &s), "generate");
      Print(Text(s));
    };
  });

  // tune
  auto* tune = app.add_subcommand("tune", "Search diversity, repetition and length decay");
  ConfigOptions tu_cfg;
  std::string tu_ckpt, tu_vocab, tu_articles, tu_out;
  int tu_budget = 0;
  tune->add_option("--ckpt", tu_ckpt, "Fine-tuned checkpoint")->required()->check(CLI::ExistingFile);
  tune->add_option("--vocab", tu_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  tune->add_option("--articles", tu_articles, "Titled articles (JSONL)")->required()->check(CLI::ExistingFile);
  tune->add_option("--budget", tu_budget, "Objective evaluations")->check(CLI::PositiveNumber);
  tune->add_option("--out", tu_out, "Trace (JSONL)")->required();
  tu_cfg.Attach(tune);
  tune->callback([&] {
    action = [&] {
      std::vector<std::string> extra;
      if (tu_budget > 0) extra.push_back("tune.budget=" + std::to_string(tu_budget));
      const std::string cfg = tu_cfg.Resolve(extra);
      auto vocab = LoadVocab(tu_vocab);
      auto model = LoadModel(tu_ckpt, vocab.get());
      hg_text* s = nullptr;
      Check(hg_tune(model.get(), cfg.c_str(), tu_articles.c_str(), tu_out.c_str(), &s), "tune");
      Print(Text(s));
    };
  });

  // perplexity
  auto* ppl = app.add_subcommand("perplexity", "Perplexity of a checkpoint on a corpus");
  std::string p_ckpt, p_vocab, p_docs, p_mode = "lm";
  ppl->add_option("--ckpt", p_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  ppl->add_option("--vocab", p_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  ppl->add_option("--docs", p_docs, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  ppl->add_option("--mode", p_mode, "lm (every token) or headline (headline tokens)")
      ->check(CLI::IsMember({"lm", "headline"}));
  ppl->callback([&] {
    action = [&] {
      auto vocab = LoadVocab(p_vocab);
      auto model = LoadModel(p_ckpt, vocab.get());
      double value = 0.0;
      std::size_t tokens = 0;
      Check(hg_perplexity(model.get(), p_docs.c_str(),
                          p_mode == "lm" ? HG_PPL_LANGUAGE_MODEL : HG_PPL_HEADLINE, &value, &tokens),
            "perplexity");
      std::printf("ppl=%.6f tokens=%zu\n", value, tokens);
    };
  });

  // bleu
  auto* bleu = app.add_subcommand("bleu", "Sentence BLEU of a hypothesis against a reference");
  std::string b_hyp, b_ref, b_vocab;
  bleu->add_option("--hyp", b_hyp, "Hypothesis")->required();
  bleu->add_option("--ref", b_ref, "Reference")->required();
  bleu->add_option("--vocab", b_vocab, "Score token ids instead of words")->check(CLI::ExistingFile);
  bleu->callback([&] {
    action = [&] {
      VocabPtr vocab;
      if (!b_vocab.empty()) vocab = LoadVocab(b_vocab);
      double score = 0.0;
      Check(hg_bleu(vocab.get(), b_hyp.c_str(), b_ref.c_str(), &score), "bleu");
      std::printf("%.6f\n", score);
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Blinded human-evaluation worksheets and reports");
  ev->require_subcommand(1);
  ConfigOptions e_cfg;
  std::string e_ckpt, e_vocab, e_articles, e_out, e_key, e_brands;
  std::vector<std::string> e_sheets, e_evaluators;
  auto* ws = ev->add_subcommand("worksheet", "Generate headlines and a blinded worksheet plus key");
  ws->add_option("--ckpt", e_ckpt, "Fine-tuned checkpoint")->required()->check(CLI::ExistingFile);
  ws->add_option("--vocab", e_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  ws->add_option("--articles", e_articles, "Titled articles (JSONL)")->required()->check(CLI::ExistingFile);
  ws->add_option("--out-dir", e_out, "Output directory")->required();
  e_cfg.Attach(ws);
  ws->callback([&] {
    action = [&] {
      const std::string cfg = e_cfg.Resolve();
      auto vocab = LoadVocab(e_vocab);
      auto model = LoadModel(e_ckpt, vocab.get());
      hg_text* s = nullptr;
      Check(hg_eval_worksheet(model.get(), cfg.c_str(), e_articles.c_str(), e_out.c_str(), &s),
            "eval worksheet");
      Print(Text(s));
    };
  });
  const auto sheet_options = [&](CLI::App* sub) {
    sub->add_option("--key", e_key, "Key file")->required()->check(CLI::ExistingFile);
    sub->add_option("--sheet", e_sheets, "Filled worksheet, one per evaluator (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--evaluator", e_evaluators,
                    "Evaluator names in --sheet order (default: file stem)");
    sub->add_option("--brands", e_brands, "article_id,brand map")->check(CLI::ExistingFile);
  };
  const auto sheet_args = [&](std::vector<const char*>* paths, std::vector<const char*>* names) {
    if (!e_evaluators.empty() && e_evaluators.size() != e_sheets.size()) {
      throw Failure{"eval: give one --evaluator per --sheet"};
    }
    for (const auto& s : e_sheets) paths->push_back(s.c_str());
    for (const auto& n : e_evaluators) names->push_back(n.c_str());
  };
  auto* ingest = ev->add_subcommand("ingest", "Validate and normalize filled worksheets");
  sheet_options(ingest);
  ingest->add_option("--out", e_out, "Normalized annotations (CSV)")->required();
  ingest->callback([&] {
    action = [&] {
      std::vector<const char*> paths, names;
      sheet_args(&paths, &names);
      hg_text* s = nullptr;
      Check(hg_eval_ingest(e_key.c_str(), paths.data(), names.empty() ? nullptr : names.data(),
                           paths.size(), e_brands.empty() ? nullptr : e_brands.c_str(),
                           e_out.c_str(), &s),
            "eval ingest");
      Print(Text(s));
    };
  });
  auto* report = ev->add_subcommand("report", "Acceptance, brand, summary and kappa tables");
  sheet_options(report);
  report->add_option("--out-dir", e_out, "Output directory")->required();
  report->callback([&] {
    action = [&] {
      std::vector<const char*> paths, names;
      sheet_args(&paths, &names);
      hg_text* s = nullptr;
      Check(hg_eval_report(e_key.c_str(), paths.data(), names.empty() ? nullptr : names.data(),
                           paths.size(), e_brands.empty() ? nullptr : e_brands.c_str(),
                           e_out.c_str(), &s),
            "eval report");
      Print(Text(s));
    };
  });

  // demo
  auto* demo = app.add_subcommand("demo", "Run the synthetic end-to-end pipeline and print its report");
  ConfigOptions d_cfg;
  std::string d_out;
  demo->add_option("--out-dir", d_out, "Write artifacts here");
  d_cfg.Attach(demo);
  demo->callback([&] {
    action = [&] {
      const std::string cfg = d_cfg.Resolve();
      hg_text* s = nullptr;
      Check(hg_pipeline_demo(cfg.c_str(), d_out.empty() ? nullptr : d_out.c_str(), &s), "demo");
      Print(Text(s));
    };
  });

  // config
  auto* conf = app.add_subcommand("config", "Print the resolved run configuration");
  ConfigOptions r_cfg;
  r_cfg.Attach(conf);
  conf->callback([&] {
    action = [&] { std::fputs(r_cfg.Resolve().c_str(), stdout); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }
  try {
    if (action) action();
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return 1;
  }
  return 0;
}
