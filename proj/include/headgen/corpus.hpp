// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace headgen {

/// One title/body article. The body is never empty after ingestion and the
/// title, when present, is a single line.
struct ArticleRecord {
  std::string id;
  std::optional<std::string> title;
  std::string body;
  std::optional<std::string> brand;
  std::vector<std::string> tags;

  bool operator==(const ArticleRecord&) const = default;
};

struct IngestResult {
  std::vector<ArticleRecord> records;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Parses line-delimited JSON records with fields `title` (optional),
/// `body` (required), `brand`, `id`, `tags` and `ingress` (all optional).
/// Malformed lines are skipped and counted; an unreadable stream throws.
IngestResult IngestRecords(std::istream& in);
IngestResult IngestFile(const std::filesystem::path& path);

void WriteRecords(std::ostream& out, std::span<const ArticleRecord> records);
void WriteRecordsFile(const std::filesystem::path& path,
                      std::span<const ArticleRecord> records);

/// Ingress first, then a blank line, then the body proper.
std::string ConcatIngress(std::string_view body, std::string_view ingress);

/// Language-model text of a record: title, blank line, body.
std::string PretrainText(const ArticleRecord& record);

/// Drops untitled records and records carrying any of `non_news_tags`.
std::vector<ArticleRecord> FilterForFinetune(
    std::span<const ArticleRecord> records,
    std::span<const std::string> non_news_tags = {});

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  std::vector<ArticleRecord> train;
  std::vector<ArticleRecord> valid;
  std::vector<ArticleRecord> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle followed by largest-remainder apportionment, so each part
/// is within one record of its exact share.
CorpusSplit Split(std::span<const ArticleRecord> records, SplitRatios ratios,
                  std::uint64_t seed);

SplitRatios ParseRatios(std::string_view text);

}  // namespace headgen
