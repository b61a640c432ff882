// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "headgen/corpus.hpp"

namespace headgen {

struct SyntheticArticle {
  ArticleRecord record;  // id "synth-NNNN", title, body and brand set
  std::string entity;    // surname planted in body and headline
};

/// Templated news items: a named person acts in a town; the body names the
/// person in full and again by surname, and the headline carries the
/// surname. Deterministic in (count, seed).
std::vector<SyntheticArticle> SyntheticCorpus(std::size_t count, std::uint64_t seed);

}  // namespace headgen
