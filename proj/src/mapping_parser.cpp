// SPDX-License-Identifier: Apache-2.0
#include "vidlm/mapping_parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "vidlm/errors.hpp"

namespace vidlm {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  std::string quoted() {
    const char quote = s_[pos_++];
    std::string out;
    while (!done()) {
      const char c = s_[pos_++];
      if (c == quote) return out;
      if (c == '\\' && !done()) {
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default: out += e; break;
        }
        continue;
      }
      out += c;
    }
    throw ParseError("unterminated string in mapping");
  }

  std::string bare(std::string_view stops) {
    const std::size_t start = pos_;
    while (!done() && stops.find(s_[pos_]) == std::string_view::npos) ++pos_;
    return std::string(trim(s_.substr(start, pos_ - start)));
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const MappingValue* FlatMapping::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::vector<std::string_view> find_brace_mappings(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  int depth = 0;
  char quote = '\0';
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (depth == 0) {
      if (c == '{') {
        start = i;
        depth = 1;
      }
      continue;
    }
    if (quote != '\0') {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = '\0';
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      out.push_back(text.substr(start, i - start + 1));
    }
  }
  return out;
}

FlatMapping parse_flat_mapping(std::string_view mapping) {
  Cursor cur(trim(mapping));
  if (!cur.consume('{')) throw ParseError("mapping must start with '{'");
  FlatMapping out;
  cur.skip_space();
  while (!cur.consume('}')) {
    if (cur.done()) throw ParseError("unterminated mapping");
    std::string key;
    if (cur.peek() == '\'' || cur.peek() == '"') {
      key = cur.quoted();
    } else {
      key = cur.bare(":,}");
    }
    if (key.empty()) throw ParseError("empty key in mapping");
    cur.skip_space();
    if (!cur.consume(':')) throw ParseError("expected ':' after key '" + key + "'");
    cur.skip_space();
    MappingValue value;
    if (cur.peek() == '\'' || cur.peek() == '"') {
      value.text = cur.quoted();
      value.quoted = true;
    } else if (cur.peek() == '{' || cur.peek() == '[') {
      throw ParseError("nested values are not supported");
    } else {
      value.text = cur.bare(",}");
      if (value.text.empty()) throw ParseError("missing value for key '" + key + "'");
    }
    out.entries.emplace_back(std::move(key), std::move(value));
    cur.skip_space();
    if (cur.consume(',')) {
      cur.skip_space();
      continue;
    }
    if (cur.peek() != '}') throw ParseError("expected ',' or '}' in mapping");
  }
  cur.skip_space();
  if (!cur.done()) throw ParseError("trailing characters after mapping");
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace vidlm
