// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace headgen::eval {

inline constexpr int kGeneratedPerArticle = 4;
inline constexpr int kSlots = kGeneratedPerArticle + 1;
inline constexpr int kEvaluators = 3;
inline constexpr int kCriteria = 3;
inline constexpr std::array<const char*, kCriteria> kCriterionNames = {
    "language", "usable", "good"};

struct WorksheetArticle {
  std::string id;
  std::string body;
  std::vector<std::string> generated;
  std::string real;
};

struct WorksheetRow {
  std::string article_id;
  std::string body;  // only on the first slot of each article
  int slot = 0;      // 1-based
  std::string headline;
};

struct KeyEntry {
  std::string article_id;
  int real_slot = 0;
};

struct KeyFile {
  std::vector<KeyEntry> entries;
  std::uint64_t seed = 0;

  std::optional<int> RealSlot(const std::string& article_id) const;
};

struct WorksheetBuild {
  std::vector<WorksheetRow> rows;
  KeyFile key;
};

/// Shuffles the five headlines of every article with one seeded generator.
WorksheetBuild BuildWorksheet(const std::vector<WorksheetArticle>& articles,
                              std::uint64_t seed);

/// Columns: article_id, body, slot, headline, language, usable, good,
/// feedback; the criteria and feedback cells are left blank.
void WriteWorksheet(std::ostream& out, const std::vector<WorksheetRow>& rows);
void WriteKey(std::ostream& out, const KeyFile& key);
KeyFile ReadKey(std::istream& in);

struct FilledSheet {
  std::string evaluator;
  std::string source;  // used in error locations
  std::istream* in = nullptr;
};

struct AnnotationRecord {
  std::string article_id;
  int slot = 0;
  std::string evaluator;
  bool real = false;
  std::string brand;
  std::array<bool, kCriteria> pass{};
};

struct AnnotationSet {
  std::vector<AnnotationRecord> records;
  std::size_t headline_count = 0;  // distinct (article, slot) seen
  std::size_t missing_rows = 0;    // rows with every criterion blank
  std::size_t nesting_fixes = 0;
  std::vector<std::string> warnings;
};

/// Blank criteria rows count as missing. A blank cell after a failed
/// criterion is read as 0; any other blank or non-binary cell is an error.
/// Nesting violations are fixed by conjunction with the preceding criterion.
AnnotationSet IngestAnnotations(const std::vector<FilledSheet>& sheets,
                                const KeyFile& key,
                                const std::map<std::string, std::string>& brands = {});

/// Columns: article_id, slot, evaluator, real, brand, language, usable, good.
void WriteAnnotations(std::ostream& out, const AnnotationSet& set);

/// Two columns, article_id and brand, with a header row.
std::map<std::string, std::string> ReadBrands(std::istream& in);

/// True when strictly more than half of the votes pass.
bool MajorityPass(const std::vector<bool>& votes);

struct HeadlineVerdict {
  std::string article_id;
  int slot = 0;
  bool real = false;
  std::string brand;
  std::array<bool, kCriteria> pass{};
};

/// Only headlines rated by exactly kEvaluators distinct evaluators.
std::vector<HeadlineVerdict> MajorityVote(const AnnotationSet& set);

struct CriterionRates {
  std::size_t count = 0;
  std::array<std::size_t, kCriteria> passes{};
  // conditional[k] is measured among headlines passing criterion k-1.
  std::array<std::optional<double>, kCriteria> conditional;
  std::array<std::optional<double>, kCriteria> total;
};

CriterionRates RatesFromPasses(const std::vector<std::array<bool, kCriteria>>& rows);

struct GroupRates {
  std::string group;
  std::string kind;  // "real" or "generated"
  CriterionRates rates;
};

struct KappaRow {
  std::string criterion;
  std::string scope;  // "all", "real" or "generated"
  std::size_t items = 0;
  std::optional<double> kappa;
};

struct EvaluationReport {
  std::size_t headline_count = 0;
  std::size_t complete_headlines = 0;
  std::size_t missing_rows = 0;
  std::size_t nesting_fixes = 0;
  std::vector<GroupRates> per_evaluator;
  std::vector<GroupRates> per_brand;
  std::vector<GroupRates> summary;
  std::vector<KappaRow> kappa;
};

/// Per-evaluator rates use fully evaluated headlines only.
EvaluationReport BuildReport(const AnnotationSet& set);

void WriteRatesTable(std::ostream& out, const std::vector<GroupRates>& rows);
void WriteKappaTable(std::ostream& out, const std::vector<KappaRow>& rows);

/// counts[i][c] = raters assigning item i to category c. Every row must sum
/// to the same n >= 2, with at least two items.
double FleissKappa(const std::vector<std::vector<int>>& counts);

}  // namespace headgen::eval
