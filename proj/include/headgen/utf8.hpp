// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace headgen::utf8 {

bool IsValid(std::string_view bytes);

// Replaces every maximal invalid subsequence with U+FFFD. Returns the
// number of replacements made.
std::size_t Sanitize(std::string_view bytes, std::string* out);

void AppendCodePoint(char32_t cp, std::string* out);

}  // namespace headgen::utf8
