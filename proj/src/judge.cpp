// SPDX-License-Identifier: Apache-2.0
#include "vidlm/judge.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <stdexcept>
#include <thread>

#include "vidlm/errors.hpp"
#include "vidlm/mapping_parser.hpp"

namespace vidlm {

namespace {

constexpr std::string_view kSystem =
    "You are an intelligent chatbot designed for evaluating the correctness of generative outputs for "
    "question-answer pairs.\n"
    "Your task is to compare the predicted answer with the correct answer and determine if they match "
    "meaningfully. Here is how you can accomplish the task:\n"
    "------\n"
    "## INSTRUCTIONS:\n"
    "- Focus on the meaningful match between the predicted answer and the correct answer.\n"
    "- Consider synonyms or paraphrases as valid matches.\n"
    "- Evaluate the correctness of the prediction compared to the answer.";

constexpr std::string_view kUser =
    "Please evaluate the following video-based question-answer pair:\n"
    "\n"
    "Question: {question}\n"
    "Correct Answer: {answer}\n"
    "Predicted Answer: {pred}\n"
    "\n"
    "Provide your evaluation only as a yes/no and score where the score is an integer value between 0 and 5, "
    "with 5 indicating the highest meaningful match.\n"
    "Please generate the response in the form of a Python dictionary string with keys 'pred' and 'score', "
    "where value of 'pred' is a string of 'yes' or 'no' and value of 'score' is in INTEGER, not STRING.\n"
    "DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string.\n"
    "For example, your response should look like this: {'pred': 'yes', 'score': 4.8}.";

struct AspectText {
  Aspect aspect;
  std::string_view code;
  std::string_view name;
  std::string_view focus;
};

constexpr std::array<AspectText, 5> kAspects = {{
    {Aspect::correctness, "COR", "correctness",
     "Judge whether the facts in the predicted answer agree with the correct answer."},
    {Aspect::detail_orientation, "DO", "detail orientation",
     "Judge whether the predicted answer covers the specific details given in the correct answer."},
    {Aspect::contextual_understanding, "CU", "contextual understanding",
     "Judge whether the predicted answer fits the overall context of the video described by the correct answer."},
    {Aspect::temporal_understanding, "TU", "temporal understanding",
     "Judge whether the predicted answer orders and relates events in time the way the correct answer does."},
    {Aspect::consistency, "CON", "consistency",
     "Judge whether the predicted answer is free of contradictions with itself and with the correct answer."},
}};

const AspectText& aspect_text(Aspect aspect) {
  for (const auto& a : kAspects) {
    if (a.aspect == aspect) return a;
  }
  throw std::invalid_argument("unknown aspect");
}

void require_non_empty(std::string_view value, const char* field) {
  if (trim(value).empty()) throw std::invalid_argument(std::string(field) + " is empty");
}

std::string substitute(std::string_view templ, std::string_view question, std::string_view answer,
                       std::string_view pred) {
  std::string out;
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      const std::size_t close = templ.find('}', i);
      if (close != std::string_view::npos) {
        const std::string_view name = templ.substr(i + 1, close - i - 1);
        const std::string_view* value = nullptr;
        if (name == "question") value = &question;
        if (name == "answer") value = &answer;
        if (name == "pred") value = &pred;
        if (value) {
          out += *value;
          i = close + 1;
          continue;
        }
      }
    }
    out += templ[i++];
  }
  return out;
}

}  // namespace

std::string_view qa_judge_system_template() { return kSystem; }
std::string_view qa_judge_user_template() { return kUser; }

JudgePrompt build_qa_judge_prompt(std::string_view question, std::string_view answer, std::string_view pred) {
  require_non_empty(question, "question");
  require_non_empty(answer, "answer");
  require_non_empty(pred, "prediction");
  return {std::string(kSystem), substitute(kUser, question, answer, pred)};
}

JudgeVerdict parse_verdict(std::string_view raw) {
  if (trim(raw).empty()) throw std::invalid_argument("verdict text is empty");
  const auto spans = find_brace_mappings(raw);
  if (spans.empty()) throw ParseError("no {...} mapping in verdict");
  if (spans.size() > 1) throw ParseError("more than one mapping in verdict");
  const FlatMapping mapping = parse_flat_mapping(spans.front());

  const MappingValue* pred = nullptr;
  const MappingValue* score = nullptr;
  for (const auto& [key, value] : mapping.entries) {
    const std::string k = to_lower(trim(key));
    if (k == "pred") {
      if (pred) throw ParseError("duplicate 'pred' key");
      pred = &value;
    } else if (k == "score") {
      if (score) throw ParseError("duplicate 'score' key");
      score = &value;
    }
  }
  if (!pred) throw ParseError("verdict has no 'pred' key");
  if (!score) throw ParseError("verdict has no 'score' key");

  JudgeVerdict out;
  const std::string p = to_lower(trim(pred->text));
  if (p == "yes") {
    out.pred = Verdict::yes;
  } else if (p == "no") {
    out.pred = Verdict::no;
  } else {
    throw ParseError("'pred' must be yes or no, got '" + pred->text + "'");
  }
  const auto value = parse_number(score->text);
  if (!value) throw ParseError("'score' is not a finite number: '" + score->text + "'");
  out.score = std::clamp(*value, 0.0, kMaxScore);
  return out;
}

std::string render_verdict(const JudgeVerdict& verdict) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), verdict.score);
  std::string out = "{'pred': '";
  out += verdict.pred == Verdict::yes ? "yes" : "no";
  out += "', 'score': ";
  out.append(buf.data(), res.ptr);
  out += "}";
  return out;
}

EvalMetrics aggregate_qa(std::span<const JudgeVerdict> verdicts) {
  if (verdicts.empty()) throw std::invalid_argument("no verdicts to aggregate");
  std::size_t yes = 0;
  double total = 0.0;
  for (const auto& v : verdicts) {
    if (v.pred == Verdict::yes) ++yes;
    total += v.score;
  }
  const auto n = static_cast<double>(verdicts.size());
  return {verdicts.size(), static_cast<double>(yes) / n, total / n};
}

Aspect parse_aspect(std::string_view code) {
  for (const auto& a : kAspects) {
    if (a.code == code) return a.aspect;
  }
  throw std::invalid_argument("unknown aspect: " + std::string(code));
}

std::string_view aspect_code(Aspect aspect) { return aspect_text(aspect).code; }
std::string_view aspect_name(Aspect aspect) { return aspect_text(aspect).name; }

JudgePrompt build_aspect_prompt(Aspect aspect, std::string_view question, std::string_view answer,
                                std::string_view pred) {
  const AspectText& a = aspect_text(aspect);
  JudgePrompt prompt = build_qa_judge_prompt(question, answer, pred);
  prompt.system += "\n- Focus on " + std::string(a.name) + ": " + std::string(a.focus);
  const std::string marker = "\n\nProvide your evaluation";
  const std::size_t at = prompt.user.rfind(marker);
  prompt.user.insert(at + 2, "Rate the predicted answer for " + std::string(a.name) + ".\n");
  return prompt;
}

std::vector<JudgeOutcome> run_qa_judge(std::span<const QaItem> items, ChatClient& client, std::size_t parallelism) {
  if (parallelism == 0) throw std::invalid_argument("parallelism must be at least 1");
  std::vector<JudgeOutcome> results(items.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < items.size(); k = next++) {
      JudgeOutcome& out = results[k];
      try {
        const JudgePrompt prompt = build_qa_judge_prompt(items[k].question, items[k].answer, items[k].prediction);
        out.raw = client.complete({{"system", prompt.system}, {"user", prompt.user}});
        out.verdict = parse_verdict(out.raw);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };

  const std::size_t threads = std::min(parallelism, items.size());
  if (threads <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  return results;
}

}  // namespace vidlm
