/* Copyright 2026 The headgen Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef HEADGEN_HEADGEN_H_
#define HEADGEN_HEADGEN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HG_API __declspec(dllexport)
#else
#define HG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hg_status {
  HG_OK = 0,
  HG_ERR_INVALID_ARGUMENT = 1,
  HG_ERR_IO = 2,
  HG_ERR_FORMAT = 3,
  HG_ERR_NUMERIC = 4,
  HG_ERR_STATE = 5,
  HG_ERR_INTERNAL = 6
} hg_status;

typedef enum hg_algo {
  HG_ALGO_GREEDY = 0,
  HG_ALGO_SAMPLE = 1,
  HG_ALGO_BEAM = 2,
  HG_ALGO_DBS = 3
} hg_algo;

typedef enum hg_ppl_mode {
  HG_PPL_LANGUAGE_MODEL = 0, /* title and body, every token */
  HG_PPL_HEADLINE = 1        /* fine-tuning format, headline tokens only */
} hg_ppl_mode;

typedef struct hg_text hg_text;
typedef struct hg_vocab hg_vocab;
typedef struct hg_model hg_model;

/* Message for the last failure on the calling thread; empty after success. */
HG_API const char* hg_last_error(void);
HG_API const char* hg_status_name(hg_status status);
HG_API const char* hg_version(void);

/* Owned, NUL-terminated text returned by many calls. */
HG_API const char* hg_text_data(const hg_text* text);
HG_API size_t hg_text_size(const hg_text* text);
HG_API void hg_text_free(hg_text* text);

/* Configuration: every entry point taking `config_json` expects a resolved
 * run configuration as produced here. `file` may be NULL. */
HG_API hg_status hg_config_resolve(const char* file, const char* const* overrides,
                                   size_t n_overrides, hg_text** json);
/* Tab-separated "key desk full-scale" lines. */
HG_API hg_status hg_parameter_table(hg_text** table);

/* Corpus. Summaries are short human-readable reports. */
HG_API hg_status hg_corpus_synth(size_t count, uint64_t seed, const char* out_path);
HG_API hg_status hg_corpus_split(const char* in_path, const char* ratios, uint64_t seed,
                                 const char* out_dir, hg_text** summary);
HG_API hg_status hg_corpus_filter(const char* in_path, const char* non_news_tags,
                                  const char* out_path, hg_text** summary);

/* Tokenizer. */
HG_API hg_status hg_vocab_learn(const char* corpus_path, size_t target, hg_vocab** out);
HG_API hg_status hg_vocab_load(const char* path, hg_vocab** out);
HG_API hg_status hg_vocab_save(const hg_vocab* vocab, const char* path);
HG_API size_t hg_vocab_size(const hg_vocab* vocab);
HG_API hg_status hg_vocab_encode(const hg_vocab* vocab, const char* text, size_t length,
                                 int32_t** ids, size_t* n_ids);
HG_API void hg_ids_free(int32_t* ids);
HG_API hg_status hg_vocab_decode(const hg_vocab* vocab, const int32_t* ids, size_t n_ids,
                                 hg_text** text);
HG_API hg_status hg_vocab_special_id(const hg_vocab* vocab, const char* name, int32_t* id);
HG_API void hg_vocab_free(hg_vocab* vocab);

/* Training. `init_ckpt` may be NULL to start from a fresh initialization. */
HG_API hg_status hg_train_pretrain(const char* config_json, const char* vocab_path,
                                   const char* train_path, const char* valid_path,
                                   const char* init_ckpt, const char* out_dir,
                                   hg_text** summary);
HG_API hg_status hg_train_finetune(const char* config_json, const char* vocab_path,
                                   const char* ckpt_path, const char* train_path,
                                   const char* valid_path, const char* out_dir,
                                   hg_text** summary);

/* Inference. The model must have been trained with `vocab`. */
HG_API hg_status hg_model_load(const char* ckpt_path, const hg_vocab* vocab, hg_model** out);
HG_API void hg_model_free(hg_model* model);

/* Newline-separated headlines: one for greedy, sample and beam, one per
 * group for dbs. */
HG_API hg_status hg_generate(hg_model* model, const char* config_json, hg_algo algo,
                             const char* body, hg_text** headlines);
/* Searches diversity, repetition and length decay against the mean set
 * BLEU on the titled articles; writes a line-delimited trace. */
HG_API hg_status hg_tune(hg_model* model, const char* config_json, const char* articles_path,
                         const char* trace_path, hg_text** summary);
HG_API hg_status hg_perplexity(hg_model* model, const char* docs_path, hg_ppl_mode mode,
                               double* ppl, size_t* tokens);
/* Token-id BLEU with `vocab`, whitespace-word BLEU when it is NULL. */
HG_API hg_status hg_bleu(const hg_vocab* vocab, const char* hypothesis, const char* reference,
                         double* score);

/* Human evaluation. */
HG_API hg_status hg_eval_worksheet(hg_model* model, const char* config_json,
                                   const char* articles_path, const char* out_dir,
                                   hg_text** summary);
/* Writes normalized annotations as CSV. `brands_path` may be NULL. */
HG_API hg_status hg_eval_ingest(const char* key_path, const char* const* sheet_paths,
                                const char* const* evaluators, size_t n_sheets,
                                const char* brands_path, const char* out_path,
                                hg_text** summary);
/* Writes evaluators.csv, kappa.csv, brands.csv and summary.csv. */
HG_API hg_status hg_eval_report(const char* key_path, const char* const* sheet_paths,
                                const char* const* evaluators, size_t n_sheets,
                                const char* brands_path, const char* out_dir,
                                hg_text** summary);

/* End-to-end synthetic run; `out_dir` may be NULL to skip artifacts. */
HG_API hg_status hg_pipeline_demo(const char* config_json, const char* out_dir,
                                  hg_text** report);

#ifdef __cplusplus
}
#endif

#endif /* HEADGEN_HEADGEN_H_ */
