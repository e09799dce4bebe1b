// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidlm/chat_client.hpp"

namespace vidlm {

enum class Verdict { yes, no };

struct JudgeVerdict {
  Verdict pred = Verdict::no;
  double score = 0.0;  // clamped into [0, 5]

  bool operator==(const JudgeVerdict&) const = default;
};

struct EvalMetrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  double mean_score = 0.0;
};

struct JudgePrompt {
  std::string system;
  std::string user;
};

inline constexpr double kMaxScore = 5.0;

std::string_view qa_judge_system_template();
std::string_view qa_judge_user_template();  // holds {question}, {answer}, {pred}

// Placeholders are replaced in one pass; braces inside the inputs are kept.
JudgePrompt build_qa_judge_prompt(std::string_view question, std::string_view answer, std::string_view pred);

// Exactly one {...} mapping with keys pred and score must be present.
JudgeVerdict parse_verdict(std::string_view raw);

// "{'pred': 'yes', 'score': 4.8}" with the shortest round-tripping score.
std::string render_verdict(const JudgeVerdict& verdict);

EvalMetrics aggregate_qa(std::span<const JudgeVerdict> verdicts);

// Per-aspect scoring for generative answers. Aspect wording is our own.
enum class Aspect { correctness, detail_orientation, contextual_understanding, temporal_understanding, consistency };

Aspect parse_aspect(std::string_view code);  // COR, DO, CU, TU, CON
std::string_view aspect_code(Aspect aspect);
std::string_view aspect_name(Aspect aspect);

JudgePrompt build_aspect_prompt(Aspect aspect, std::string_view question, std::string_view answer,
                                std::string_view pred);

struct QaItem {
  std::string question;
  std::string answer;
  std::string prediction;
};

struct JudgeOutcome {
  std::optional<JudgeVerdict> verdict;
  std::string raw;
  std::string error;  // set when the request or the parse failed
};

// Judges items on up to parallelism threads. Results keep input order.
std::vector<JudgeOutcome> run_qa_judge(std::span<const QaItem> items, ChatClient& client, std::size_t parallelism);

}  // namespace vidlm
