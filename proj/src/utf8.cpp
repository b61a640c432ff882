// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/utf8.hpp"

namespace headgen::utf8 {
namespace {

// Length of the valid sequence starting at `i`, or 0 when the bytes at `i`
// do not begin a well-formed code point.
std::size_t ValidPrefix(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) {
    return static_cast<unsigned char>(s[i + k]);
  };
  const std::size_t left = s.size() - i;
  const unsigned char c0 = b(0);
  if (c0 < 0x80) return 1;
  if (c0 >= 0xC2 && c0 <= 0xDF) {
    return (left >= 2 && (b(1) & 0xC0) == 0x80) ? 2 : 0;
  }
  if (c0 >= 0xE0 && c0 <= 0xEF) {
    if (left < 3) return 0;
    const unsigned char lo = (c0 == 0xE0) ? 0xA0 : 0x80;
    const unsigned char hi = (c0 == 0xED) ? 0x9F : 0xBF;
    if (b(1) < lo || b(1) > hi) return 0;
    return (b(2) & 0xC0) == 0x80 ? 3 : 0;
  }
  if (c0 >= 0xF0 && c0 <= 0xF4) {
    if (left < 4) return 0;
    const unsigned char lo = (c0 == 0xF0) ? 0x90 : 0x80;
    const unsigned char hi = (c0 == 0xF4) ? 0x8F : 0xBF;
    if (b(1) < lo || b(1) > hi) return 0;
    if ((b(2) & 0xC0) != 0x80 || (b(3) & 0xC0) != 0x80) return 0;
    return 4;
  }
  return 0;
}

// Number of bytes forming the maximal invalid prefix at `i` (at least 1).
std::size_t InvalidSpan(std::string_view s, std::size_t i) {
  const unsigned char c0 = static_cast<unsigned char>(s[i]);
  std::size_t need = 0;
  if (c0 >= 0xC2 && c0 <= 0xDF) need = 2;
  else if (c0 >= 0xE0 && c0 <= 0xEF) need = 3;
  else if (c0 >= 0xF0 && c0 <= 0xF4) need = 4;
  if (need == 0) return 1;
  std::size_t k = 1;
  while (k < need && i + k < s.size() &&
         (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80) {
    if (k == 1) {
      const unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
      if ((c0 == 0xE0 && c1 < 0xA0) || (c0 == 0xED && c1 > 0x9F) ||
          (c0 == 0xF0 && c1 < 0x90) || (c0 == 0xF4 && c1 > 0x8F)) {
        break;
      }
    }
    ++k;
  }
  return k;
}

}  // namespace

bool IsValid(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    const std::size_t n = ValidPrefix(bytes, i);
    if (n == 0) return false;
    i += n;
  }
  return true;
}

std::size_t Sanitize(std::string_view bytes, std::string* out) {
  out->clear();
  out->reserve(bytes.size());
  std::size_t replaced = 0;
  std::size_t i = 0;
  while (i < bytes.size()) {
    const std::size_t n = ValidPrefix(bytes, i);
    if (n > 0) {
      out->append(bytes.substr(i, n));
      i += n;
    } else {
      out->append("\xEF\xBF\xBD");
      ++replaced;
      i += InvalidSpan(bytes, i);
    }
  }
  return replaced;
}

void AppendCodePoint(char32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace headgen::utf8
