// SPDX-License-Identifier: Apache-2.0
#include "vidlm/prompting.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

#include "vidlm/errors.hpp"
#include "vidlm/tensor.hpp"

namespace vidlm {

namespace {

constexpr std::string_view kLinePrefix = "### ";
constexpr std::string_view kHumanPrefix = "### Human: ";
constexpr std::string_view kAssistantPrefix = "### Assistant: ";
constexpr std::string_view kGenerationCue = "### Assistant:";
constexpr std::string_view kTurnBoundary = "\n### ";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void check_content(std::string_view content, std::string_view what) {
  if (content.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  if (is_space(content.back()) || is_space(content.front())) {
    throw std::invalid_argument(std::string(what) + " has leading or trailing whitespace");
  }
  if (content.find(kTurnBoundary) != std::string_view::npos) {
    throw std::invalid_argument(std::string(what) + " contains a turn marker");
  }
  if (content.find("<p_") != std::string_view::npos || content.find("<f_") != std::string_view::npos) {
    throw std::invalid_argument(std::string(what) + " contains a reserved video placeholder");
  }
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

}  // namespace

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> CharTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  out.reserve(text.size());
  for (char c : text) out.emplace_back(1, c);
  return out;
}

std::string patch_placeholder(std::size_t index) { return "<p_" + std::to_string(index) + ">"; }
std::string frame_placeholder(std::size_t index) { return "<f_" + std::to_string(index) + ">"; }

std::string video_placeholders(std::size_t frames) {
  std::string out;
  for (std::size_t i = 1; i <= kPatchCount; ++i) {
    if (i > 1) out += ' ';
    out += patch_placeholder(i);
  }
  for (std::size_t j = 1; j <= frames; ++j) {
    out += ' ';
    out += frame_placeholder(j);
  }
  return out;
}

std::string render_prompt(const PromptRecord& record, const RenderOptions& options) {
  if (record.frames == 0) throw std::invalid_argument("prompt needs at least one frame");
  if (record.turns.empty()) throw std::invalid_argument("prompt has no turns");
  check_content(record.system_message, "system message");

  std::string out;
  out += kLinePrefix;
  out += record.system_message;
  for (std::size_t k = 0; k < record.turns.size(); ++k) {
    const Turn& turn = record.turns[k];
    const Speaker expected = (k % 2 == 0) ? Speaker::human : Speaker::assistant;
    if (turn.speaker != expected) throw std::invalid_argument("turns must alternate starting with Human");
    check_content(turn.content, "turn content");
    out += '\n';
    if (turn.speaker == Speaker::human) {
      out += kHumanPrefix;
      out += turn.content;
      if (k == 0) {
        out += ' ';
        out += video_placeholders(record.frames);
      }
    } else {
      out += kAssistantPrefix;
      out += turn.content;
    }
  }
  if (record.turns.back().speaker == Speaker::human) {
    out += '\n';
    out += kGenerationCue;
  }

  const WhitespaceTokenizer fallback;
  const Tokenizer& tokenizer = options.tokenizer ? *options.tokenizer : fallback;
  const BudgetCheck check = token_budget_check(out, tokenizer, options.budget);
  if (!check.within_budget) {
    throw CapacityError("rendered prompt has " + std::to_string(check.count) + " tokens, budget is " +
                        std::to_string(options.budget));
  }
  return out;
}

PromptRecord parse_rendered_prompt(std::string_view rendered) {
  if (!starts_with(rendered, kLinePrefix)) throw ParseError("prompt does not start with '### '");
  std::vector<std::string_view> blocks;
  std::size_t start = 0;
  while (true) {
    const std::size_t next = rendered.find(kTurnBoundary, start);
    blocks.push_back(rendered.substr(start, next == std::string_view::npos ? next : next - start));
    if (next == std::string_view::npos) break;
    start = next + 1;
  }

  PromptRecord record;
  record.system_message = std::string(blocks.front().substr(kLinePrefix.size()));
  record.frames = 0;
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    const std::string_view block = blocks[k];
    if (block == kGenerationCue) {
      if (k + 1 != blocks.size()) throw ParseError("generation cue before the end of the prompt");
      break;
    }
    if (starts_with(block, kHumanPrefix)) {
      std::string_view content = block.substr(kHumanPrefix.size());
      if (record.turns.empty()) {
        const std::string patches = " " + video_placeholders(0);
        const std::size_t at = content.find(patches);
        if (at == std::string_view::npos) throw ParseError("first Human turn lacks patch placeholders");
        std::string_view tail = content.substr(at + patches.size());
        content = content.substr(0, at);
        std::size_t frames = 0;
        while (!tail.empty()) {
          const std::string expected = " " + frame_placeholder(frames + 1);
          if (!starts_with(tail, expected)) throw ParseError("malformed frame placeholders");
          tail.remove_prefix(expected.size());
          ++frames;
        }
        if (frames == 0) throw ParseError("first Human turn lacks frame placeholders");
        record.frames = frames;
      }
      record.turns.push_back({Speaker::human, std::string(content)});
    } else if (starts_with(block, kAssistantPrefix)) {
      record.turns.push_back({Speaker::assistant, std::string(block.substr(kAssistantPrefix.size()))});
    } else {
      throw ParseError("unrecognized prompt line: " + std::string(block.substr(0, 40)));
    }
  }
  if (record.turns.empty()) throw ParseError("prompt has no turns");
  return record;
}

BudgetCheck token_budget_check(std::string_view rendered, const Tokenizer& tokenizer, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("token budget must be positive");
  const std::size_t count = tokenizer.count(rendered);
  return {count, count <= budget};
}

}  // namespace vidlm
