// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "headgen/common.hpp"
#include "json.hpp"

extern char** environ;

namespace headgen {
namespace {

using nlohmann::ordered_json;

ordered_json TrainJson(const TrainConfig& c) {
  ordered_json j;
  j["peak_lr"] = c.peak_lr;
  j["n_warmup"] = c.n_warmup;
  j["batch_rows"] = c.batch_rows;
  j["seq_len"] = c.seq_len;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["max_steps"] = c.max_steps;
  j["epochs"] = c.epochs;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

ordered_json ToTree(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["corpus"] = {{"articles", c.corpus.articles},
                 {"split", {c.corpus.split.train, c.corpus.split.valid, c.corpus.split.test}}};
  j["tokenizer"] = {{"target", c.tokenizer.target}};
  j["model"] = {{"n_layers", c.model.n_layers},
                {"d_model", c.model.d_model},
                {"n_heads", c.model.n_heads},
                {"context", c.model.context}};
  j["pretrain"] = TrainJson(c.pretrain);
  j["finetune"] = TrainJson(c.finetune);
  j["decode"] = {{"groups", c.decode.groups},
                 {"beams_per_group", c.decode.beams_per_group},
                 {"diversity_penalty", c.decode.diversity_penalty},
                 {"repetition_penalty", c.decode.repetition_penalty},
                 {"length_decay", c.decode.length_decay},
                 {"max_len", c.decode.max_len},
                 {"temperature", c.decode.temperature},
                 {"top_k", c.decode.top_k},
                 {"top_p", c.decode.top_p},
                 {"repeat_counts_prompt", c.decode.repeat_counts_prompt}};
  j["tune"] = {{"budget", c.tune.budget},
               {"n_init", c.tune.n_init},
               {"articles", c.tune.articles}};
  return j;
}

template <typename V>
void Take(const ordered_json& j, const char* key, V* out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    Fail(ErrorKind::kFormat, "config key '" + where + key + "' has the wrong type");
  }
}

void CheckKeys(const ordered_json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) Fail(ErrorKind::kFormat, "config section '" + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) Fail(ErrorKind::kFormat, "unknown config key '" + where + k + "'");
  }
}

void MergeTrain(const ordered_json& j, TrainConfig* c, const std::string& where) {
  CheckKeys(j, {"peak_lr", "n_warmup", "batch_rows", "seq_len", "weight_decay", "beta1",
                "beta2", "eps", "max_steps", "epochs", "checkpoint_every"},
            where);
  Take(j, "peak_lr", &c->peak_lr, where);
  Take(j, "n_warmup", &c->n_warmup, where);
  Take(j, "batch_rows", &c->batch_rows, where);
  Take(j, "seq_len", &c->seq_len, where);
  Take(j, "weight_decay", &c->weight_decay, where);
  Take(j, "beta1", &c->beta1, where);
  Take(j, "beta2", &c->beta2, where);
  Take(j, "eps", &c->eps, where);
  Take(j, "max_steps", &c->max_steps, where);
  Take(j, "epochs", &c->epochs, where);
  Take(j, "checkpoint_every", &c->checkpoint_every, where);
}

void MergeTree(const ordered_json& j, RunConfig* c) {
  CheckKeys(j, {"seed", "corpus", "tokenizer", "model", "pretrain", "finetune", "decode", "tune"},
            "");
  Take(j, "seed", &c->seed, "");
  if (j.contains("corpus")) {
    const auto& s = j["corpus"];
    CheckKeys(s, {"articles", "split"}, "corpus.");
    Take(s, "articles", &c->corpus.articles, "corpus.");
    if (s.contains("split")) {
      std::vector<double> r;
      Take(s, "split", &r, "corpus.");
      if (r.size() != 3) Fail(ErrorKind::kFormat, "corpus.split needs three ratios");
      c->corpus.split = {r[0], r[1], r[2]};
    }
  }
  if (j.contains("tokenizer")) {
    CheckKeys(j["tokenizer"], {"target"}, "tokenizer.");
    Take(j["tokenizer"], "target", &c->tokenizer.target, "tokenizer.");
  }
  if (j.contains("model")) {
    const auto& s = j["model"];
    CheckKeys(s, {"n_layers", "d_model", "n_heads", "context"}, "model.");
    Take(s, "n_layers", &c->model.n_layers, "model.");
    Take(s, "d_model", &c->model.d_model, "model.");
    Take(s, "n_heads", &c->model.n_heads, "model.");
    Take(s, "context", &c->model.context, "model.");
  }
  if (j.contains("pretrain")) MergeTrain(j["pretrain"], &c->pretrain, "pretrain.");
  if (j.contains("finetune")) MergeTrain(j["finetune"], &c->finetune, "finetune.");
  if (j.contains("decode")) {
    const auto& s = j["decode"];
    CheckKeys(s, {"groups", "beams_per_group", "diversity_penalty", "repetition_penalty",
                  "length_decay", "max_len", "temperature", "top_k", "top_p",
                  "repeat_counts_prompt"},
              "decode.");
    Take(s, "groups", &c->decode.groups, "decode.");
    Take(s, "beams_per_group", &c->decode.beams_per_group, "decode.");
    Take(s, "diversity_penalty", &c->decode.diversity_penalty, "decode.");
    Take(s, "repetition_penalty", &c->decode.repetition_penalty, "decode.");
    Take(s, "length_decay", &c->decode.length_decay, "decode.");
    Take(s, "max_len", &c->decode.max_len, "decode.");
    Take(s, "temperature", &c->decode.temperature, "decode.");
    Take(s, "top_k", &c->decode.top_k, "decode.");
    Take(s, "top_p", &c->decode.top_p, "decode.");
    Take(s, "repeat_counts_prompt", &c->decode.repeat_counts_prompt, "decode.");
  }
  if (j.contains("tune")) {
    const auto& s = j["tune"];
    CheckKeys(s, {"budget", "n_init", "articles"}, "tune.");
    Take(s, "budget", &c->tune.budget, "tune.");
    Take(s, "n_init", &c->tune.n_init, "tune.");
    Take(s, "articles", &c->tune.articles, "tune.");
  }
}

std::string Lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

RunConfig::RunConfig() {
  pretrain.peak_lr = 2e-3;
  pretrain.n_warmup = 100;
  pretrain.batch_rows = 8;
  pretrain.seq_len = 128;
  pretrain.epochs = 8;
  finetune.peak_lr = 1e-3;
  finetune.n_warmup = 50;
  finetune.batch_rows = 8;
  finetune.epochs = 6;
}

void RunConfig::Validate() const {
  if (corpus.articles < 10) Fail(ErrorKind::kInvalidArgument, "corpus.articles must be >= 10");
  const double sum = corpus.split.train + corpus.split.valid + corpus.split.test;
  if (std::abs(sum - 1.0) > 1e-9 || corpus.split.train <= 0 || corpus.split.valid <= 0 ||
      corpus.split.test <= 0) {
    Fail(ErrorKind::kInvalidArgument, "corpus.split must be three positive ratios summing to 1");
  }
  if (tokenizer.target < Vocab::kMinSize) {
    Fail(ErrorKind::kInvalidArgument,
         "tokenizer.target must be >= " + std::to_string(Vocab::kMinSize));
  }
  ModelConfig m = model;
  m.vocab_size = static_cast<int>(Vocab::kMinSize);
  m.Validate();
  pretrain.Validate(m);
  finetune.Validate(m);
  decode.Validate();
  if (tune.n_init < 2 || tune.budget < tune.n_init || tune.articles == 0) {
    Fail(ErrorKind::kInvalidArgument, "tune needs budget >= n_init >= 2 and articles > 0");
  }
}

std::string RunConfig::ToJson() const { return ToTree(*this).dump(2) + "\n"; }

void RunConfig::MergeJson(std::string_view json) {
  ordered_json j;
  try {
    j = ordered_json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorKind::kFormat, std::string("config is not valid JSON: ") + e.what());
  }
  MergeTree(j, this);
}

void RunConfig::Set(std::string_view dotted_key, std::string_view value) {
  ordered_json v;
  try {
    v = ordered_json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = std::string(value);
  }
  const std::string key(dotted_key);
  const auto dot = key.find('.');
  ordered_json patch;
  if (dot == std::string::npos) {
    patch[key] = v;
  } else {
    patch[key.substr(0, dot)][key.substr(dot + 1)] = v;
  }
  MergeTree(patch, this);
}

ModelConfig RunConfig::SeededModel(int vocab_size) const {
  ModelConfig m = model;
  m.vocab_size = vocab_size;
  m.seed = seed * 4 + 1;
  return m;
}

TrainConfig RunConfig::SeededPretrain() const {
  TrainConfig t = pretrain;
  t.seed = seed * 4 + 2;
  return t;
}

TrainConfig RunConfig::SeededFinetune() const {
  TrainConfig t = finetune;
  t.seed = seed * 4 + 3;
  return t;
}

DecodeConfig RunConfig::SeededDecode() const {
  DecodeConfig d = decode;
  d.seed = seed;
  return d;
}

RunConfig ResolveRunConfig(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides) {
  RunConfig config;
  if (file) {
    std::ifstream in(*file);
    if (!in) Fail(ErrorKind::kIo, "cannot open config file " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    config.MergeJson(ss.str());
  }
  std::vector<std::pair<std::string, std::string>> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    if (entry.rfind("HEADGEN_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(8, eq - 8);
    const auto sep = name.find("__");
    std::string key = sep == std::string::npos
                          ? Lower(name)
                          : Lower(name.substr(0, sep)) + "." + Lower(name.substr(sep + 2));
    env.emplace_back(std::move(key), entry.substr(eq + 1));
  }
  std::sort(env.begin(), env.end());
  for (const auto& [k, v] : env) config.Set(k, v);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      Fail(ErrorKind::kInvalidArgument, "override '" + o + "' is not key=value");
    }
    config.Set(o.substr(0, eq), o.substr(eq + 1));
  }
  config.Validate();
  return config;
}

std::vector<ParameterDoc> ParameterTable() {
  const RunConfig d;
  return {
      {"tokenizer.target", std::to_string(d.tokenizer.target),
       std::to_string(Vocab::kFullScaleTargetSize)},
      {"model.d_model", std::to_string(d.model.d_model), std::to_string(ModelConfig::kFullScaleDModel)},
      {"model.n_layers", std::to_string(d.model.n_layers), "n/r"},
      {"model.n_heads", std::to_string(d.model.n_heads), "n/r"},
      {"model.context", std::to_string(d.model.context), std::to_string(ModelConfig::kContext)},
      {"pretrain.n_warmup", std::to_string(d.pretrain.n_warmup),
       std::to_string(TrainConfig::kFullScaleWarmup)},
      {"pretrain.peak_lr", Num(d.pretrain.peak_lr), "n/r"},
      {"pretrain.weight_decay", Num(d.pretrain.weight_decay), "0"},
      {"decode.groups", std::to_string(d.decode.groups), "4"},
      {"decode.beams_per_group", std::to_string(d.decode.beams_per_group), "2"},
      {"decode.diversity_penalty", Num(d.decode.diversity_penalty), "0.71"},
      {"decode.repetition_penalty", Num(d.decode.repetition_penalty), "3"},
      {"decode.length_decay", Num(d.decode.length_decay), "0.87"},
      {"decode.max_len", std::to_string(d.decode.max_len), "48"},
      {"tune.articles", std::to_string(d.tune.articles), "100"},
  };
}

}  // namespace headgen
