// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "headgen/common.hpp"
#include "json.hpp"

namespace headgen {
namespace {

using nlohmann::json;

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Returns an error message for a malformed line, or nothing on success.
std::optional<std::string> ParseLine(const std::string& line,
                                     std::size_t line_no,
                                     ArticleRecord* out) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return std::string("invalid JSON: ") + e.what();
  }
  if (!j.is_object()) return "record is not an object";

  const auto body_it = j.find("body");
  if (body_it == j.end() || !body_it->is_string()) {
    return "missing string field 'body'";
  }
  std::string body(Trim(body_it->get_ref<const std::string&>()));

  if (const auto it = j.find("ingress"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return "field 'ingress' is not a string";
    const std::string_view ingress = Trim(it->get_ref<const std::string&>());
    if (!ingress.empty()) body = ConcatIngress(body, ingress);
  }
  if (body.empty()) return "empty body";

  ArticleRecord rec;
  rec.body = std::move(body);

  if (const auto it = j.find("title"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return "field 'title' is not a string";
    const std::string_view title = Trim(it->get_ref<const std::string&>());
    if (title.find_first_of("\r\n") != std::string_view::npos) {
      return "title contains a newline";
    }
    if (!title.empty()) rec.title = std::string(title);
  }
  if (const auto it = j.find("brand"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return "field 'brand' is not a string";
    rec.brand = it->get<std::string>();
  }
  if (const auto it = j.find("tags"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) return "field 'tags' is not an array";
    for (const auto& t : *it) {
      if (!t.is_string()) return "field 'tags' holds a non-string";
      rec.tags.push_back(t.get<std::string>());
    }
  }
  if (const auto it = j.find("id"); it != j.end() && !it->is_null()) {
    if (it->is_string()) {
      rec.id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      rec.id = std::to_string(it->get<long long>());
    } else {
      return "field 'id' is neither string nor integer";
    }
  } else {
    rec.id = "line-" + std::to_string(line_no);
  }
  *out = std::move(rec);
  return std::nullopt;
}

}  // namespace

IngestResult IngestRecords(std::istream& in) {
  if (!in.good()) Fail(ErrorKind::kIo, "record stream is not readable");
  IngestResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    ArticleRecord rec;
    std::optional<std::string> err = ParseLine(line, line_no, &rec);
    if (!err && !seen.insert(rec.id).second) {
      err = "duplicate id '" + rec.id + "'";
    }
    if (err) {
      ++result.skipped;
      std::string msg = "line " + std::to_string(line_no) + ": " + *err;
      Warn(msg);
      result.warnings.push_back(std::move(msg));
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  if (in.bad()) Fail(ErrorKind::kIo, "read error in record stream");
  return result;
}

IngestResult IngestFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open record file " + path.string());
  return IngestRecords(in);
}

void WriteRecords(std::ostream& out, std::span<const ArticleRecord> records) {
  for (const ArticleRecord& r : records) {
    json j;
    j["id"] = r.id;
    if (r.title) j["title"] = *r.title;
    j["body"] = r.body;
    if (r.brand) j["brand"] = *r.brand;
    if (!r.tags.empty()) j["tags"] = r.tags;
    out << j.dump() << '\n';
  }
}

void WriteRecordsFile(const std::filesystem::path& path,
                      std::span<const ArticleRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  WriteRecords(out, records);
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::string ConcatIngress(std::string_view body, std::string_view ingress) {
  std::string out;
  out.reserve(ingress.size() + 2 + body.size());
  out.append(ingress);
  out.append("\n\n");
  out.append(body);
  return out;
}

std::string PretrainText(const ArticleRecord& record) {
  return record.title.value_or("") + "\n\n" + record.body;
}

std::vector<ArticleRecord> FilterForFinetune(
    std::span<const ArticleRecord> records,
    std::span<const std::string> non_news_tags) {
  std::vector<ArticleRecord> out;
  for (const ArticleRecord& r : records) {
    if (!r.title || r.title->empty()) continue;
    const bool non_news = std::any_of(
        r.tags.begin(), r.tags.end(), [&](const std::string& tag) {
          return std::find(non_news_tags.begin(), non_news_tags.end(), tag) !=
                 non_news_tags.end();
        });
    if (!non_news) out.push_back(r);
  }
  return out;
}

CorpusSplit Split(std::span<const ArticleRecord> records, SplitRatios ratios,
                  std::uint64_t seed) {
  const std::array<double, 3> r = {ratios.train, ratios.valid, ratios.test};
  for (double x : r) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      Fail(ErrorKind::kInvalidArgument, "split ratios must be non-negative");
    }
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    Fail(ErrorKind::kInvalidArgument, "split ratios must sum to 1");
  }

  const std::size_t n = records.size();
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = r[k] * static_cast<double>(n);
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
    ++sizes[order[i % 3]];
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[UniformBelow(rng, i)]);
  }

  CorpusSplit out;
  out.seed = seed;
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    auto& part = k == 0 ? out.train : (k == 1 ? out.valid : out.test);
    part.reserve(sizes[k]);
    for (std::size_t j = 0; j < sizes[k]; ++j) {
      part.push_back(records[idx[pos++]]);
    }
  }
  return out;
}

SplitRatios ParseRatios(std::string_view text) {
  std::vector<double> parts;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      Fail(ErrorKind::kInvalidArgument, "bad ratio '" + item + "'");
    }
  }
  if (parts.size() != 3) {
    Fail(ErrorKind::kInvalidArgument, "expected three comma-separated ratios");
  }
  return {parts[0], parts[1], parts[2]};
}

}  // namespace headgen
