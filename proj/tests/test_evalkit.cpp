// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/csv.hpp"
#include "headgen/evalkit.hpp"

namespace headgen::eval {
namespace {

using Triple = std::array<int, kCriteria>;

void Quiet(const std::string&) {}

class EvalTest : public ::testing::Test {
 protected:
  void SetUp() override { previous_ = SetWarningSink(&Quiet); }
  void TearDown() override { SetWarningSink(previous_); }

 private:
  WarningSink previous_ = nullptr;
};

std::vector<WorksheetArticle> Articles(std::size_t n) {
  std::vector<WorksheetArticle> out;
  for (std::size_t i = 0; i < n; ++i) {
    WorksheetArticle a;
    a.id = "a" + std::to_string(i);
    a.body = "Body, with \"quotes\"\nand two lines " + std::to_string(i);
    for (int g = 0; g < kGeneratedPerArticle; ++g) {
      a.generated.push_back("gen " + std::to_string(i) + "-" + std::to_string(g));
    }
    a.real = "real " + std::to_string(i);
    out.push_back(std::move(a));
  }
  return out;
}

// Writes a filled worksheet; `cells` maps (article, slot) to the three
// criterion cells, with "" for blank.
std::string FilledCsv(const std::vector<WorksheetRow>& rows,
                      const std::map<std::pair<std::string, int>, std::array<std::string, 3>>& cells) {
  std::ostringstream out;
  csv::WriteRow(out, {"article_id", "body", "slot", "headline", "language", "usable", "good",
                      "feedback"});
  for (const auto& r : rows) {
    std::array<std::string, 3> c = {"", "", ""};
    if (const auto it = cells.find({r.article_id, r.slot}); it != cells.end()) c = it->second;
    csv::WriteRow(out, {r.article_id, r.body, std::to_string(r.slot), r.headline, c[0], c[1], c[2],
                        ""});
  }
  return out.str();
}

std::array<std::string, 3> Cells(const Triple& t) {
  return {std::to_string(t[0]), std::to_string(t[1]), std::to_string(t[2])};
}

AnnotationRecord Rec(const std::string& article, int slot, const std::string& ev, bool real,
                     const Triple& t, const std::string& brand = "unbranded") {
  AnnotationRecord r;
  r.article_id = article;
  r.slot = slot;
  r.evaluator = ev;
  r.real = real;
  r.brand = brand;
  for (int k = 0; k < kCriteria; ++k) r.pass[k] = t[k] != 0;
  return r;
}

// Kappa from pairwise rater agreement, computed without the squared-count
// shortcut.
double KappaByPairs(const std::vector<std::vector<int>>& counts) {
  const std::size_t cats = counts.front().size();
  int n = 0;
  for (int c : counts.front()) n += c;
  double agree = 0.0;
  std::vector<double> totals(cats, 0.0);
  for (const auto& row : counts) {
    std::vector<int> labels;
    for (std::size_t c = 0; c < cats; ++c) {
      for (int k = 0; k < row[c]; ++k) labels.push_back(static_cast<int>(c));
      totals[c] += row[c];
    }
    int pairs = 0, same = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (i == j) continue;
        ++pairs;
        same += labels[i] == labels[j] ? 1 : 0;
      }
    }
    agree += static_cast<double>(same) / pairs;
  }
  const double items = static_cast<double>(counts.size());
  const double p_obs = agree / items;
  double p_exp = 0.0;
  for (double t : totals) p_exp += (t / (items * n)) * (t / (items * n));
  return (p_obs - p_exp) / (1.0 - p_exp);
}

TEST_F(EvalTest, HundredArticlesGiveFiveHundredRows) {
  const auto build = BuildWorksheet(Articles(100), 3);
  EXPECT_EQ(build.rows.size(), 500u);
  EXPECT_EQ(build.key.entries.size(), 100u);
  for (std::size_t i = 0; i < build.rows.size(); ++i) {
    EXPECT_EQ(build.rows[i].slot, static_cast<int>(i % 5) + 1);
    EXPECT_EQ(build.rows[i].body.empty(), i % 5 != 0);
  }
  // The key points at the real headline.
  for (const auto& e : build.key.entries) {
    const std::size_t art = std::stoul(e.article_id.substr(1));
    EXPECT_EQ(build.rows[art * 5 + static_cast<std::size_t>(e.real_slot) - 1].headline,
              "real " + e.article_id.substr(1));
  }
}

TEST_F(EvalTest, RealSlotIsUniform) {
  const auto one = Articles(1);
  std::array<int, kSlots> counts{};
  const int builds = 10000;
  for (int s = 0; s < builds; ++s) {
    ++counts[static_cast<std::size_t>(BuildWorksheet(one, static_cast<std::uint64_t>(s)).key.entries[0].real_slot - 1)];
  }
  const double expected = builds / 5.0;
  const double se = std::sqrt(builds * 0.2 * 0.8);
  double chi2 = 0.0;
  for (int c : counts) {
    EXPECT_NEAR(c, expected, 3.0 * se);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 4 degrees of freedom, 0.1% upper tail.
  EXPECT_LT(chi2, 18.467);
}

TEST_F(EvalTest, SameSeedSameWorksheetAndKey) {
  const auto arts = Articles(20);
  std::ostringstream w1, w2, k1, k2;
  const auto a = BuildWorksheet(arts, 9), b = BuildWorksheet(arts, 9);
  WriteWorksheet(w1, a.rows);
  WriteWorksheet(w2, b.rows);
  WriteKey(k1, a.key);
  WriteKey(k2, b.key);
  EXPECT_EQ(w1.str(), w2.str());
  EXPECT_EQ(k1.str(), k2.str());
  std::istringstream in(k1.str());
  const KeyFile back = ReadKey(in);
  ASSERT_EQ(back.entries.size(), 20u);
  EXPECT_EQ(back.seed, 9u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(back.entries[i].real_slot, a.key.entries[i].real_slot);
}

TEST_F(EvalTest, WorksheetCarriesNoKeyInformation) {
  const auto build = BuildWorksheet(Articles(10), 1);
  std::ostringstream out;
  WriteWorksheet(out, build.rows);
  std::istringstream in(out.str());
  const auto header = csv::ReadRow(in);
  ASSERT_TRUE(header.has_value());
  EXPECT_EQ(*header, (std::vector<std::string>{"article_id", "body", "slot", "headline", "language",
                                               "usable", "good", "feedback"}));
  while (auto row = csv::ReadRow(in)) {
    ASSERT_EQ(row->size(), 8u);
    for (std::size_t c = 4; c < 8; ++c) EXPECT_TRUE((*row)[c].empty());
  }
  EXPECT_EQ(out.str().find("real_slot"), std::string::npos);
}

TEST_F(EvalTest, BuildRejectsWrongHeadlineCount) {
  auto arts = Articles(2);
  arts[1].generated.pop_back();
  EXPECT_THROW(BuildWorksheet(arts, 1), Error);
}

TEST_F(EvalTest, ConsistentSheetHasNoWarnings) {
  const auto build = BuildWorksheet(Articles(4), 2);
  std::map<std::pair<std::string, int>, std::array<std::string, 3>> cells;
  for (const auto& r : build.rows) cells[{r.article_id, r.slot}] = Cells({1, r.slot % 2, 0});
  std::istringstream s(FilledCsv(build.rows, cells));
  const auto set = IngestAnnotations({{"e1", "e1.csv", &s}}, build.key);
  EXPECT_TRUE(set.warnings.empty());
  EXPECT_EQ(set.nesting_fixes, 0u);
  EXPECT_EQ(set.records.size(), 20u);
  EXPECT_EQ(set.headline_count, 20u);
}

TEST_F(EvalTest, NestingViolationIsNormalizedWithOneWarning) {
  const auto build = BuildWorksheet(Articles(1), 2);
  std::map<std::pair<std::string, int>, std::array<std::string, 3>> cells;
  for (const auto& r : build.rows) cells[{r.article_id, r.slot}] = Cells({1, 1, 1});
  cells[{"a0", 3}] = {"0", "1", ""};
  std::istringstream s(FilledCsv(build.rows, cells));
  const auto set = IngestAnnotations({{"e1", "e1.csv", &s}}, build.key);
  EXPECT_EQ(set.warnings.size(), 1u);
  EXPECT_EQ(set.nesting_fixes, 1u);
  for (const auto& r : set.records) {
    if (r.slot == 3) {
      EXPECT_FALSE(r.pass[0]);
      EXPECT_FALSE(r.pass[1]);
      EXPECT_FALSE(r.pass[2]);
    }
    // good implies usable implies language on every normalized record.
    EXPECT_TRUE(!r.pass[2] || r.pass[1]);
    EXPECT_TRUE(!r.pass[1] || r.pass[0]);
  }
}

TEST_F(EvalTest, NonBinaryCellIsAnErrorWithLocation) {
  const auto build = BuildWorksheet(Articles(1), 2);
  std::map<std::pair<std::string, int>, std::array<std::string, 3>> cells;
  for (const auto& r : build.rows) cells[{r.article_id, r.slot}] = Cells({1, 1, 1});
  cells[{"a0", 2}] = {"1", "yes", "0"};
  std::istringstream s(FilledCsv(build.rows, cells));
  try {
    IngestAnnotations({{"e1", "sheet.csv", &s}}, build.key);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("sheet.csv:"), std::string::npos);
  }
}

TEST_F(EvalTest, BlankRowsExcludedFromCompleteHeadlines) {
  const auto build = BuildWorksheet(Articles(100), 5);
  std::vector<std::string> texts;
  for (int ev = 0; ev < kEvaluators; ++ev) {
    std::map<std::pair<std::string, int>, std::array<std::string, 3>> cells;
    for (std::size_t i = 0; i < build.rows.size(); ++i) {
      const auto& r = build.rows[i];
      // 33 headlines are left blank by exactly one evaluator each.
      const bool blank = i < 33 * 3 && i % 3 == 0 && static_cast<int>((i / 3) % 3) == ev;
      if (!blank) cells[{r.article_id, r.slot}] = Cells({1, 1, 0});
    }
    texts.push_back(FilledCsv(build.rows, cells));
  }
  std::istringstream s0(texts[0]), s1(texts[1]), s2(texts[2]);
  const auto set = IngestAnnotations({{"e1", "e1", &s0}, {"e2", "e2", &s1}, {"e3", "e3", &s2}},
                                     build.key);
  EXPECT_EQ(set.missing_rows, 33u);
  EXPECT_EQ(set.headline_count, 500u);
  const auto report = BuildReport(set);
  EXPECT_EQ(report.complete_headlines, 467u);
  EXPECT_EQ(MajorityVote(set).size(), 467u);
}

TEST(Majority, TwoOfThreePasses) {
  EXPECT_TRUE(MajorityPass({true, true, false}));
  EXPECT_FALSE(MajorityPass({false, false, false}));
  EXPECT_FALSE(MajorityPass({true, false, false}));
  EXPECT_TRUE(MajorityPass({true, true, true}));
  EXPECT_TRUE(MajorityPass({false, true, true}));
}

TEST(Majority, SymmetricInEvaluatorOrder) {
  std::mt19937_64 rng(3);
  AnnotationSet set;
  for (int h = 0; h < 30; ++h) {
    for (const char* ev : {"x", "y", "z"}) {
      Triple t{};
      t[0] = static_cast<int>(rng() % 2);
      t[1] = t[0] ? static_cast<int>(rng() % 2) : 0;
      t[2] = t[1] ? static_cast<int>(rng() % 2) : 0;
      set.records.push_back(Rec("a" + std::to_string(h / 5), h % 5 + 1, ev, h % 5 == 0, t));
    }
  }
  const auto base = MajorityVote(set);
  for (int trial = 0; trial < 10; ++trial) {
    AnnotationSet shuffled = set;
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
    const auto again = MajorityVote(shuffled);
    ASSERT_EQ(again.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(again[i].pass, base[i].pass);
  }
}

TEST(Rates, ConditionalRatesMultiplyToTotals) {
  // 2000 headlines: 1740 pass language, 609 of those are usable and 414 of
  // those are good.
  std::vector<std::array<bool, kCriteria>> rows;
  for (int i = 0; i < 2000; ++i) rows.push_back({i < 1740, i < 609, i < 414});
  const CriterionRates r = RatesFromPasses(rows);
  EXPECT_NEAR(*r.conditional[0], 0.87, 1e-12);
  EXPECT_NEAR(*r.conditional[1], 0.35, 1e-12);
  EXPECT_NEAR(*r.conditional[2], 0.68, 0.001);
  EXPECT_NEAR(std::round(*r.total[0] * 100) / 100, 0.87, 1e-12);
  EXPECT_NEAR(std::round(*r.total[1] * 100) / 100, 0.30, 1e-12);
  EXPECT_NEAR(std::round(*r.total[2] * 100) / 100, 0.21, 1e-12);
  double product = 1.0;
  for (int k = 0; k < kCriteria; ++k) {
    product *= *r.conditional[k];
    EXPECT_NEAR(*r.total[k], product, 1e-12);
  }
}

TEST(Rates, AllPassIsOne) {
  const std::vector<std::array<bool, kCriteria>> rows(7, {true, true, true});
  const CriterionRates r = RatesFromPasses(rows);
  for (int k = 0; k < kCriteria; ++k) {
    EXPECT_EQ(*r.conditional[k], 1.0);
    EXPECT_EQ(*r.total[k], 1.0);
  }
}

TEST(Rates, EmptyDenominatorsAreUndefined) {
  const std::vector<std::array<bool, kCriteria>> rows(3, {false, false, false});
  const CriterionRates r = RatesFromPasses(rows);
  EXPECT_EQ(*r.conditional[0], 0.0);
  EXPECT_FALSE(r.conditional[1].has_value());
  EXPECT_EQ(*r.total[2], 0.0);
  std::ostringstream out;
  WriteRatesTable(out, {{"g", "real", r}});
  EXPECT_NE(out.str().find("undefined"), std::string::npos);
}

TEST(Report, TenHeadlineFixtureMatchesHandTally) {
  // Triples per headline for evaluators e1, e2, e3.
  const std::vector<std::array<Triple, 3>> gen = {
      {{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}},  // language, usable, good
      {{{1, 1, 0}, {1, 1, 0}, {1, 1, 0}}},  // language, usable
      {{{1, 0, 0}, {1, 0, 0}, {1, 1, 0}}},  // language
      {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}},  // nothing
      {{{1, 1, 1}, {1, 1, 0}, {0, 0, 0}}},  // language, usable
      {{{1, 1, 1}, {1, 1, 1}, {1, 0, 0}}},  // language, usable, good
      {{{1, 0, 0}, {0, 0, 0}, {0, 0, 0}}},  // nothing
      {{{1, 1, 0}, {1, 0, 0}, {1, 1, 1}}},  // language, usable
  };
  const std::vector<std::array<Triple, 3>> real = {
      {{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}},
      {{{1, 1, 0}, {1, 1, 0}, {1, 0, 0}}},
  };
  AnnotationSet set;
  const char* evs[] = {"e1", "e2", "e3"};
  for (std::size_t h = 0; h < gen.size(); ++h) {
    for (int e = 0; e < 3; ++e) {
      set.records.push_back(Rec("g" + std::to_string(h), 1, evs[e], false, gen[h][e],
                                h < 4 ? "north" : "south"));
    }
  }
  for (std::size_t h = 0; h < real.size(); ++h) {
    for (int e = 0; e < 3; ++e) {
      set.records.push_back(Rec("r" + std::to_string(h), 2, evs[e], true, real[h][e],
                                h == 0 ? "north" : "south"));
    }
  }
  set.headline_count = 10;
  const EvaluationReport rep = BuildReport(set);
  EXPECT_EQ(rep.complete_headlines, 10u);

  const auto find = [](const std::vector<GroupRates>& rows, const std::string& group,
                       const std::string& kind) {
    for (const auto& g : rows) {
      if (g.group == group && g.kind == kind) return g.rates;
    }
    ADD_FAILURE() << "missing row " << group << "/" << kind;
    return CriterionRates{};
  };
  const CriterionRates mg = find(rep.summary, "majority", "generated");
  EXPECT_EQ(mg.count, 8u);
  EXPECT_EQ(mg.passes, (std::array<std::size_t, 3>{6, 5, 2}));
  EXPECT_DOUBLE_EQ(*mg.conditional[0], 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(*mg.conditional[1], 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(*mg.conditional[2], 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(*mg.total[1], 5.0 / 8.0);
  const CriterionRates mr = find(rep.summary, "majority", "real");
  EXPECT_EQ(mr.passes, (std::array<std::size_t, 3>{2, 2, 1}));

  const CriterionRates e1 = find(rep.per_evaluator, "e1", "generated");
  EXPECT_EQ(e1.passes, (std::array<std::size_t, 3>{7, 5, 3}));
  // e3 passes language on g0 g1 g2 g5 g7, usable on g0 g1 g2 g7, good on g0 g7.
  const CriterionRates e3 = find(rep.per_evaluator, "e3", "generated");
  EXPECT_EQ(e3.passes, (std::array<std::size_t, 3>{5, 4, 2}));

  // north: g0..g3 generated, r0 real.
  const CriterionRates north = find(rep.per_brand, "north", "generated");
  EXPECT_EQ(north.passes, (std::array<std::size_t, 3>{3, 2, 1}));
  const CriterionRates south_real = find(rep.per_brand, "south", "real");
  EXPECT_EQ(south_real.passes, (std::array<std::size_t, 3>{1, 1, 0}));

  ASSERT_EQ(rep.kappa.size(), 9u);
  std::vector<std::vector<int>> lang;
  for (const auto& h : gen) {
    int yes = 0;
    for (const auto& t : h) yes += t[0];
    lang.push_back({yes, 3 - yes});
  }
  for (const auto& h : real) {
    int yes = 0;
    for (const auto& t : h) yes += t[0];
    lang.push_back({yes, 3 - yes});
  }
  EXPECT_EQ(rep.kappa[0].criterion, "language");
  EXPECT_EQ(rep.kappa[0].scope, "all");
  ASSERT_TRUE(rep.kappa[0].kappa.has_value());
  EXPECT_NEAR(*rep.kappa[0].kappa, KappaByPairs(lang), 1e-12);
}

TEST(Report, IngestedBrandsAndRealFlags) {
  const auto build = BuildWorksheet(Articles(2), 4);
  std::map<std::pair<std::string, int>, std::array<std::string, 3>> cells;
  for (const auto& r : build.rows) cells[{r.article_id, r.slot}] = Cells({1, 0, 0});
  std::istringstream s(FilledCsv(build.rows, cells));
  std::istringstream brand_text("article_id,brand\na0,east\n");
  const auto brands = ReadBrands(brand_text);
  const auto set = IngestAnnotations({{"e1", "e1", &s}}, build.key, brands);
  int reals = 0;
  for (const auto& r : set.records) {
    EXPECT_EQ(r.brand, r.article_id == "a0" ? "east" : "unbranded");
    reals += r.real ? 1 : 0;
    EXPECT_EQ(r.real, r.slot == *build.key.RealSlot(r.article_id));
  }
  EXPECT_EQ(reals, 2);
}

TEST(Kappa, PerfectAgreementIsOne) {
  const std::vector<std::vector<int>> counts = {{3, 0}, {0, 3}, {3, 0}, {0, 3}, {3, 0}};
  EXPECT_EQ(FleissKappa(counts), 1.0);
}

TEST(Kappa, RandomRatingsNearZero) {
  std::mt19937_64 rng(17);
  std::vector<std::vector<int>> counts;
  for (int i = 0; i < 1000; ++i) {
    int yes = 0;
    for (int r = 0; r < 3; ++r) yes += static_cast<int>(rng() % 2);
    counts.push_back({yes, 3 - yes});
  }
  EXPECT_LE(std::abs(FleissKappa(counts)), 0.05);
}

TEST(Kappa, FixtureMatchesPairwiseOracle) {
  const std::vector<std::vector<int>> counts = {{3, 0}, {2, 1}, {1, 2}, {0, 3}};
  EXPECT_NEAR(FleissKappa(counts), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(FleissKappa(counts), KappaByPairs(counts), 1e-12);
  const std::vector<std::vector<int>> three = {{2, 1, 0}, {0, 3, 0}, {1, 1, 1}, {0, 0, 3}};
  EXPECT_NEAR(FleissKappa(three), KappaByPairs(three), 1e-12);
}

TEST(Kappa, InvariantUnderRelabelingAndItemOrder) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<int>> counts;
    for (int i = 0; i < 12; ++i) {
      std::vector<int> row(3, 0);
      for (int r = 0; r < 4; ++r) ++row[rng() % 3];
      counts.push_back(row);
    }
    const double base = FleissKappa(counts);
    auto relabeled = counts;
    for (auto& row : relabeled) std::rotate(row.begin(), row.begin() + 1, row.end());
    EXPECT_NEAR(FleissKappa(relabeled), base, 1e-12);
    auto permuted = counts;
    std::shuffle(permuted.begin(), permuted.end(), rng);
    EXPECT_NEAR(FleissKappa(permuted), base, 1e-12);
  }
}

TEST(Kappa, DegenerateInputsAreErrors) {
  EXPECT_THROW(FleissKappa({{3, 0}}), Error);
  EXPECT_THROW(FleissKappa({{3, 0}, {2, 0}}), Error);
  EXPECT_THROW(FleissKappa({{3, 0}, {3, 0}}), Error);
}

}  // namespace
}  // namespace headgen::eval
