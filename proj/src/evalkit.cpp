// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "headgen/common.hpp"
#include "headgen/csv.hpp"

namespace headgen::eval {
namespace {

const std::vector<std::string> kWorksheetHeader = {
    "article_id", "body", "slot", "headline", "language", "usable", "good", "feedback"};
const std::vector<std::string> kKeyHeader = {"article_id", "real_slot", "seed"};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string Location(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

int ParseSlot(const std::string& cell, const std::string& where) {
  const std::string t = Trim(cell);
  if (t.size() != 1 || t[0] < '1' || t[0] > '0' + kSlots) {
    Fail(ErrorKind::kFormat, where + ": slot must be an integer in 1.." +
                                 std::to_string(kSlots) + ", got '" + cell + "'");
  }
  return t[0] - '0';
}

std::string FormatRate(const std::optional<double>& r) {
  if (!r) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *r);
  return buf;
}

using HeadlineKey = std::pair<std::string, int>;

}  // namespace

std::optional<int> KeyFile::RealSlot(const std::string& article_id) const {
  for (const auto& e : entries) {
    if (e.article_id == article_id) return e.real_slot;
  }
  return std::nullopt;
}

WorksheetBuild BuildWorksheet(const std::vector<WorksheetArticle>& articles,
                              std::uint64_t seed) {
  WorksheetBuild out;
  out.key.seed = seed;
  std::mt19937_64 rng(seed);
  std::set<std::string> seen;
  for (const auto& a : articles) {
    if (a.generated.size() != static_cast<std::size_t>(kGeneratedPerArticle)) {
      Fail(ErrorKind::kInvalidArgument,
           "article '" + a.id + "' has " + std::to_string(a.generated.size()) +
               " generated headlines, expected " + std::to_string(kGeneratedPerArticle));
    }
    if (!seen.insert(a.id).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate article id '" + a.id + "'");
    }
    // Index kGeneratedPerArticle stands for the real headline.
    std::array<int, kSlots> order;
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[UniformBelow(rng, i)]);
    }
    for (int s = 0; s < kSlots; ++s) {
      WorksheetRow row;
      row.article_id = a.id;
      row.slot = s + 1;
      if (s == 0) row.body = a.body;
      if (order[s] == kGeneratedPerArticle) {
        row.headline = a.real;
        out.key.entries.push_back({a.id, s + 1});
      } else {
        row.headline = a.generated[order[s]];
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

void WriteWorksheet(std::ostream& out, const std::vector<WorksheetRow>& rows) {
  csv::WriteRow(out, kWorksheetHeader);
  for (const auto& r : rows) {
    csv::WriteRow(out, {r.article_id, r.body, std::to_string(r.slot), r.headline, "", "", "", ""});
  }
}

void WriteKey(std::ostream& out, const KeyFile& key) {
  csv::WriteRow(out, kKeyHeader);
  for (const auto& e : key.entries) {
    csv::WriteRow(out, {e.article_id, std::to_string(e.real_slot), std::to_string(key.seed)});
  }
}

KeyFile ReadKey(std::istream& in) {
  std::size_t line = 0;
  auto header = csv::ReadRow(in, &line);
  if (!header || *header != kKeyHeader) {
    Fail(ErrorKind::kFormat, "key file must start with 'article_id,real_slot,seed'");
  }
  KeyFile key;
  bool have_seed = false;
  while (auto row = csv::ReadRow(in, &line)) {
    if (row->size() == 1 && Trim((*row)[0]).empty()) continue;
    const std::string where = Location("key", line);
    if (row->size() != 3) Fail(ErrorKind::kFormat, where + ": expected 3 fields");
    const int slot = ParseSlot((*row)[1], where);
    std::uint64_t seed = 0;
    try {
      std::size_t used = 0;
      seed = std::stoull(Trim((*row)[2]), &used);
      if (used != Trim((*row)[2]).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      Fail(ErrorKind::kFormat, where + ": seed is not an unsigned integer");
    }
    if (have_seed && seed != key.seed) {
      Fail(ErrorKind::kFormat, where + ": key mixes different seeds");
    }
    key.seed = seed;
    have_seed = true;
    if (key.RealSlot((*row)[0])) {
      Fail(ErrorKind::kFormat, where + ": duplicate article id '" + (*row)[0] + "'");
    }
    key.entries.push_back({(*row)[0], slot});
  }
  return key;
}

AnnotationSet IngestAnnotations(const std::vector<FilledSheet>& sheets, const KeyFile& key,
                                const std::map<std::string, std::string>& brands) {
  AnnotationSet set;
  std::set<HeadlineKey> headlines;
  std::set<std::tuple<std::string, int, std::string>> rated;
  std::unordered_map<std::string, int> real_slot;
  for (const auto& e : key.entries) real_slot[e.article_id] = e.real_slot;

  for (const auto& sheet : sheets) {
    if (sheet.in == nullptr || !sheet.in->good()) {
      Fail(ErrorKind::kIo, "cannot read sheet '" + sheet.source + "'");
    }
    std::size_t line = 0;
    auto header = csv::ReadRow(*sheet.in, &line);
    if (!header) Fail(ErrorKind::kFormat, sheet.source + ": empty worksheet");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header->size(); ++i) col[Trim((*header)[i])] = i;
    for (const char* need : {"article_id", "slot", "language", "usable", "good"}) {
      if (!col.count(need)) {
        Fail(ErrorKind::kFormat, sheet.source + ": missing column '" + need + "'");
      }
    }
    while (auto row = csv::ReadRow(*sheet.in, &line)) {
      if (row->size() == 1 && Trim((*row)[0]).empty()) continue;
      const std::string where = Location(sheet.source, line);
      const auto cell = [&](const char* name) -> std::string {
        const std::size_t i = col.at(name);
        return i < row->size() ? (*row)[i] : std::string();
      };
      const std::string article = Trim(cell("article_id"));
      const auto it = real_slot.find(article);
      if (it == real_slot.end()) {
        Fail(ErrorKind::kFormat, where + ": unknown article id '" + article + "'");
      }
      const int slot = ParseSlot(cell("slot"), where);
      headlines.insert({article, slot});

      std::array<std::optional<bool>, kCriteria> raw;
      bool all_blank = true;
      for (int k = 0; k < kCriteria; ++k) {
        const std::string v = Trim(cell(kCriterionNames[k]));
        if (v.empty()) continue;
        all_blank = false;
        if (v != "0" && v != "1") {
          Fail(ErrorKind::kFormat, where + ": column '" + kCriterionNames[k] +
                                       "' must be 0 or 1, got '" + v + "'");
        }
        raw[k] = v == "1";
      }
      if (all_blank) {
        ++set.missing_rows;
        continue;
      }
      AnnotationRecord rec;
      rec.article_id = article;
      rec.slot = slot;
      rec.evaluator = sheet.evaluator;
      rec.real = slot == it->second;
      const auto b = brands.find(article);
      rec.brand = b != brands.end() ? b->second : "unbranded";
      bool preceding = true;
      for (int k = 0; k < kCriteria; ++k) {
        if (!raw[k]) {
          if (preceding) {
            Fail(ErrorKind::kFormat, where + ": column '" + kCriterionNames[k] + "' is blank");
          }
          raw[k] = false;
        }
        bool v = *raw[k];
        if (v && !preceding) {
          ++set.nesting_fixes;
          set.warnings.push_back(where + ": '" + kCriterionNames[k] +
                                 "' passed without the preceding criterion; set to 0");
          v = false;
        }
        rec.pass[k] = v;
        preceding = v;
      }
      if (!rated.insert({article, slot, sheet.evaluator}).second) {
        Fail(ErrorKind::kFormat, where + ": evaluator '" + sheet.evaluator +
                                     "' rated this headline twice");
      }
      set.records.push_back(std::move(rec));
    }
  }
  for (const auto& w : set.warnings) Warn(w);
  set.headline_count = headlines.size();
  return set;
}

void WriteAnnotations(std::ostream& out, const AnnotationSet& set) {
  csv::WriteRow(out, {"article_id", "slot", "evaluator", "real", "brand", "language", "usable",
                      "good"});
  for (const auto& r : set.records) {
    csv::WriteRow(out, {r.article_id, std::to_string(r.slot), r.evaluator, r.real ? "1" : "0",
                        r.brand, r.pass[0] ? "1" : "0", r.pass[1] ? "1" : "0",
                        r.pass[2] ? "1" : "0"});
  }
}

std::map<std::string, std::string> ReadBrands(std::istream& in) {
  std::size_t line = 0;
  const auto header = csv::ReadRow(in, &line);
  if (!header || header->size() != 2 || (*header)[0] != "article_id" || (*header)[1] != "brand") {
    Fail(ErrorKind::kFormat, "brand map must start with 'article_id,brand'");
  }
  std::map<std::string, std::string> brands;
  while (auto row = csv::ReadRow(in, &line)) {
    if (row->size() == 1 && Trim((*row)[0]).empty()) continue;
    if (row->size() != 2) Fail(ErrorKind::kFormat, Location("brands", line) + ": expected 2 fields");
    brands[(*row)[0]] = (*row)[1];
  }
  return brands;
}

bool MajorityPass(const std::vector<bool>& votes) {
  const auto yes = std::count(votes.begin(), votes.end(), true);
  return 2 * static_cast<std::size_t>(yes) > votes.size();
}

namespace {

// Records of headlines rated by exactly kEvaluators evaluators, grouped and
// ordered by (article, slot).
std::map<HeadlineKey, std::vector<const AnnotationRecord*>> CompleteGroups(
    const AnnotationSet& set) {
  std::map<HeadlineKey, std::vector<const AnnotationRecord*>> groups;
  for (const auto& r : set.records) groups[{r.article_id, r.slot}].push_back(&r);
  for (auto it = groups.begin(); it != groups.end();) {
    if (it->second.size() != static_cast<std::size_t>(kEvaluators)) {
      it = groups.erase(it);
    } else {
      ++it;
    }
  }
  return groups;
}

}  // namespace

std::vector<HeadlineVerdict> MajorityVote(const AnnotationSet& set) {
  std::vector<HeadlineVerdict> out;
  for (const auto& [key, recs] : CompleteGroups(set)) {
    HeadlineVerdict v;
    v.article_id = key.first;
    v.slot = key.second;
    v.real = recs.front()->real;
    v.brand = recs.front()->brand;
    for (int k = 0; k < kCriteria; ++k) {
      std::vector<bool> votes;
      for (const auto* r : recs) votes.push_back(r->pass[k]);
      v.pass[k] = MajorityPass(votes);
    }
    out.push_back(std::move(v));
  }
  return out;
}

CriterionRates RatesFromPasses(const std::vector<std::array<bool, kCriteria>>& rows) {
  CriterionRates r;
  r.count = rows.size();
  for (const auto& row : rows) {
    bool chain = true;
    for (int k = 0; k < kCriteria; ++k) {
      chain = chain && row[k];
      if (chain) ++r.passes[k];
    }
  }
  for (int k = 0; k < kCriteria; ++k) {
    const std::size_t denom = k == 0 ? r.count : r.passes[k - 1];
    if (denom > 0) r.conditional[k] = static_cast<double>(r.passes[k]) / static_cast<double>(denom);
    if (r.count > 0) r.total[k] = static_cast<double>(r.passes[k]) / static_cast<double>(r.count);
  }
  return r;
}

double FleissKappa(const std::vector<std::vector<int>>& counts) {
  if (counts.size() < 2) Fail(ErrorKind::kInvalidArgument, "kappa needs at least two items");
  const std::size_t cats = counts.front().size();
  if (cats < 2) Fail(ErrorKind::kInvalidArgument, "kappa needs at least two categories");
  const int n = std::accumulate(counts.front().begin(), counts.front().end(), 0);
  if (n < 2) Fail(ErrorKind::kInvalidArgument, "kappa needs at least two raters per item");
  std::vector<double> col(cats, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    if (row.size() != cats) Fail(ErrorKind::kInvalidArgument, "ragged rating matrix");
    int sum = 0;
    double sq = 0.0;
    for (std::size_t c = 0; c < cats; ++c) {
      if (row[c] < 0) Fail(ErrorKind::kInvalidArgument, "negative rating count");
      sum += row[c];
      sq += static_cast<double>(row[c]) * row[c];
      col[c] += row[c];
    }
    if (sum != n) Fail(ErrorKind::kInvalidArgument, "every item needs the same rater count");
    p_bar += (sq - n) / (static_cast<double>(n) * (n - 1));
  }
  const double items = static_cast<double>(counts.size());
  p_bar /= items;
  double p_e = 0.0;
  for (double c : col) {
    const double p = c / (items * n);
    p_e += p * p;
  }
  if (p_e >= 1.0) {
    Fail(ErrorKind::kNumeric, "kappa is undefined when every rating falls in one category");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

EvaluationReport BuildReport(const AnnotationSet& set) {
  EvaluationReport rep;
  rep.headline_count = set.headline_count;
  rep.missing_rows = set.missing_rows;
  rep.nesting_fixes = set.nesting_fixes;
  const auto groups = CompleteGroups(set);
  rep.complete_headlines = groups.size();
  const auto verdicts = MajorityVote(set);

  const auto kinds = {std::pair<const char*, bool>{"real", true}, {"generated", false}};

  std::set<std::string> evaluators;
  for (const auto& [key, recs] : groups) {
    for (const auto* r : recs) evaluators.insert(r->evaluator);
  }
  for (const auto& ev : evaluators) {
    for (const auto& [kind, real] : kinds) {
      std::vector<std::array<bool, kCriteria>> rows;
      for (const auto& [key, recs] : groups) {
        for (const auto* r : recs) {
          if (r->evaluator == ev && r->real == real) rows.push_back(r->pass);
        }
      }
      rep.per_evaluator.push_back({ev, kind, RatesFromPasses(rows)});
    }
  }

  std::set<std::string> brands;
  for (const auto& v : verdicts) brands.insert(v.brand);
  for (const auto& brand : brands) {
    for (const auto& [kind, real] : kinds) {
      std::vector<std::array<bool, kCriteria>> rows;
      for (const auto& v : verdicts) {
        if (v.brand == brand && v.real == real) rows.push_back(v.pass);
      }
      rep.per_brand.push_back({brand, kind, RatesFromPasses(rows)});
    }
  }

  for (const auto& [kind, real] : kinds) {
    std::vector<std::array<bool, kCriteria>> rows;
    for (const auto& v : verdicts) {
      if (v.real == real) rows.push_back(v.pass);
    }
    rep.summary.push_back({"majority", kind, RatesFromPasses(rows)});
  }

  for (int k = 0; k < kCriteria; ++k) {
    for (const char* scope : {"all", "real", "generated"}) {
      std::vector<std::vector<int>> counts;
      for (const auto& [key, recs] : groups) {
        const bool real = recs.front()->real;
        if ((scope[0] == 'r' && !real) || (scope[0] == 'g' && real)) continue;
        int yes = 0;
        for (const auto* r : recs) yes += r->pass[k] ? 1 : 0;
        counts.push_back({yes, kEvaluators - yes});
      }
      KappaRow row{kCriterionNames[k], scope, counts.size(), std::nullopt};
      try {
        row.kappa = FleissKappa(counts);
      } catch (const Error&) {
      }
      rep.kappa.push_back(std::move(row));
    }
  }
  return rep;
}

void WriteRatesTable(std::ostream& out, const std::vector<GroupRates>& rows) {
  csv::WriteRow(out, {"group", "kind", "headlines", "language", "usable", "good",
                      "language_total", "usable_total", "good_total"});
  for (const auto& g : rows) {
    const auto& r = g.rates;
    csv::WriteRow(out, {g.group, g.kind, std::to_string(r.count), FormatRate(r.conditional[0]),
                        FormatRate(r.conditional[1]), FormatRate(r.conditional[2]),
                        FormatRate(r.total[0]), FormatRate(r.total[1]), FormatRate(r.total[2])});
  }
}

void WriteKappaTable(std::ostream& out, const std::vector<KappaRow>& rows) {
  csv::WriteRow(out, {"criterion", "scope", "headlines", "kappa"});
  for (const auto& k : rows) {
    csv::WriteRow(out, {k.criterion, k.scope, std::to_string(k.items), FormatRate(k.kappa)});
  }
}

}  // namespace headgen::eval
