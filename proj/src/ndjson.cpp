// SPDX-License-Identifier: Apache-2.0
#include "vidlm/ndjson.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "vidlm/errors.hpp"
#include "vidlm/mapping_parser.hpp"

namespace vidlm {

std::vector<nlohmann::json> read_ndjson(std::istream& in) {
  std::vector<nlohmann::json> rows;
  std::vector<std::size_t> bad;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto value = nlohmann::json::parse(line, nullptr, false);
    if (value.is_discarded()) {
      bad.push_back(line_no);
    } else {
      rows.push_back(std::move(value));
    }
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t n : bad) list += (list.empty() ? "" : ", ") + std::to_string(n);
    throw ParseError("invalid JSON on line(s) " + list, bad);
  }
  return rows;
}

std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_ndjson(in);
}

void write_ndjson(std::ostream& out, std::span<const nlohmann::ordered_json> rows) {
  for (const auto& row : rows) out << row.dump() << '\n';
}

void write_ndjson(const std::filesystem::path& path, std::span<const nlohmann::ordered_json> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_ndjson(out, rows);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace vidlm
