// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

// Newline-delimited JSON: one value per line, blank lines skipped.
namespace vidlm {

// Throws ParseError listing every 1-based line that is not valid JSON.
std::vector<nlohmann::json> read_ndjson(std::istream& in);
std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path);

void write_ndjson(std::ostream& out, std::span<const nlohmann::ordered_json> rows);
void write_ndjson(const std::filesystem::path& path, std::span<const nlohmann::ordered_json> rows);

}  // namespace vidlm
