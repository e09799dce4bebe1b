// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Lenient reader for the brace-delimited key/value mappings chat models emit:
// JSON objects and Python dict literals alike ({'pred': 'yes', 'score': 4}).
namespace vidlm {

struct MappingValue {
  std::string text;
  bool quoted = false;
};

struct FlatMapping {
  std::vector<std::pair<std::string, MappingValue>> entries;

  const MappingValue* find(std::string_view key) const;
};

// Top-level {...} spans in text. Quotes are tracked only inside braces, so
// apostrophes in surrounding prose are harmless.
std::vector<std::string_view> find_brace_mappings(std::string_view text);

// Parses one {...} span with string or bare scalar values. Throws ParseError.
FlatMapping parse_flat_mapping(std::string_view mapping);

std::optional<double> parse_number(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace vidlm
