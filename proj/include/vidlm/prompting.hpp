// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Conversation template fed to the language model:
//
//   ### <system message>
//   ### Human: <instruction> <p_1> ... <p_256> <f_1> ... <f_T>
//   ### Assistant: <answer>
//   ...
//   ### Assistant:            (only when the record ends on a Human turn)
//
// <p_i> slots are later filled by projected patch tokens and <f_j> slots by
// projected per-frame global tokens, in that order. Video placeholders appear
// in the first Human turn only.
namespace vidlm {

inline constexpr std::size_t kLlmSequenceBudget = 2048;

enum class Speaker { human, assistant };

struct Turn {
  Speaker speaker = Speaker::human;
  std::string content;

  bool operator==(const Turn&) const = default;
};

struct PromptRecord {
  std::string system_message;
  std::vector<Turn> turns;
  std::size_t frames = 1;

  bool operator==(const PromptRecord&) const = default;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

// Splits on runs of ASCII whitespace; each placeholder is one token.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
};

// One token per byte.
class CharTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::size_t count(std::string_view text) const override { return text.size(); }
};

std::string patch_placeholder(std::size_t index);  // 1-based: "<p_1>"
std::string frame_placeholder(std::size_t index);  // 1-based: "<f_1>"

// Space-separated "<p_1> ... <p_256> <f_1> ... <f_T>".
std::string video_placeholders(std::size_t frames);

struct RenderOptions {
  const Tokenizer* tokenizer = nullptr;  // whitespace tokenizer when null
  std::size_t budget = kLlmSequenceBudget;
};

// Throws std::invalid_argument on a malformed record and CapacityError when
// the rendered text exceeds the token budget.
std::string render_prompt(const PromptRecord& record, const RenderOptions& options = {});

// Inverse of render_prompt.
PromptRecord parse_rendered_prompt(std::string_view rendered);

struct BudgetCheck {
  std::size_t count = 0;
  bool within_budget = true;
};

BudgetCheck token_budget_check(std::string_view rendered, const Tokenizer& tokenizer,
                               std::size_t budget = kLlmSequenceBudget);

}  // namespace vidlm
