// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace headgen::csv {

// RFC 4180 style: comma separated, fields quoted when they contain a comma,
// quote, CR or LF; embedded quotes doubled.
void WriteRow(std::ostream& out, const std::vector<std::string>& fields);

// Reads one logical row (quoted fields may span lines). Returns nullopt at
// end of input. `line` is advanced by the number of physical lines consumed.
std::optional<std::vector<std::string>> ReadRow(std::istream& in,
                                                std::size_t* line = nullptr);

}  // namespace headgen::csv
