#include <doctest.h>

#include "golden.hpp"
#include "golden_cases.hpp"
#include "oracles.hpp"
#include "vidlm/errors.hpp"
#include "vidlm/prompting.hpp"

using namespace vidlm;

TEST_CASE("placeholders") {
  CHECK(patch_placeholder(1) == "<p_1>");
  CHECK(frame_placeholder(12) == "<f_12>");
  const std::string three = video_placeholders(3);
  CHECK(three.substr(0, 11) == "<p_1> <p_2>");
  CHECK(three.substr(three.size() - 17) == "<f_1> <f_2> <f_3>");
  CHECK(oracle::whitespace_token_count(three) == 259);
}

TEST_CASE("golden single-turn render") {
  const PromptRecord record{"S", {{Speaker::human, "Q"}}, 1};
  const std::string rendered = render_prompt(record);
  std::string why;
  CHECK_MESSAGE(testdata::matches_golden("prompt_system_q_t1.txt", rendered, &why), why);
  CHECK(rendered.substr(0, 17) == "### S\n### Human: ");
  CHECK(rendered.substr(rendered.size() - 15) == "\n### Assistant:");
}

TEST_CASE("placeholder counts follow the frame count") {
  for (std::size_t frames : {1, 2, 8, 40}) {
    const PromptRecord record{"You are helpful.",
                              {{Speaker::human, "What happens?"}, {Speaker::assistant, "A dog runs."},
                               {Speaker::human, "Then what?"}},
                              frames};
    const std::string rendered = render_prompt(record);
    CHECK(oracle::count_substring(rendered, "<p_") == 256);
    CHECK(oracle::count_substring(rendered, "<f_") == frames);
    CHECK(oracle::count_substring(rendered, "### Human: ") == 2);
    CHECK(oracle::count_substring(rendered, "### Assistant: ") == 1);
    // Placeholders sit in the first human turn only.
    const auto second_human = rendered.find("### Human: Then what?");
    REQUIRE(second_human != std::string::npos);
    CHECK(rendered.find("<f_", second_human) == std::string::npos);
  }
}

TEST_CASE("parse inverts render") {
  const std::vector<PromptRecord> records{
      {"S", {{Speaker::human, "Q"}}, 1},
      {"A chat between a curious human and an assistant.",
       {{Speaker::human, "Describe the video."}, {Speaker::assistant, "A man\nwalks a dog."}},
       5},
      {"sys", {{Speaker::human, "a"}, {Speaker::assistant, "b"}, {Speaker::human, "c"}}, 12},
  };
  for (const auto& r : records) CHECK(parse_rendered_prompt(render_prompt(r)) == r);

  CHECK_THROWS_AS(parse_rendered_prompt("no header"), ParseError);
  CHECK_THROWS_AS(parse_rendered_prompt("### S\n### Human: Q"), ParseError);
  CHECK_THROWS_AS(parse_rendered_prompt("### S\n### Robot: hi"), ParseError);
  CHECK_THROWS_AS(parse_rendered_prompt("### S"), ParseError);
}

TEST_CASE("malformed records") {
  CHECK_THROWS_AS(render_prompt({"S", {}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"S", {{Speaker::human, "Q"}}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"", {{Speaker::human, "Q"}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"S", {{Speaker::assistant, "A"}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"S", {{Speaker::human, "Q"}, {Speaker::human, "Q"}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"S", {{Speaker::human, "Q "}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"S", {{Speaker::human, "see <p_3>"}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt({"S", {{Speaker::human, "x\n### Human: y"}}, 1}), std::invalid_argument);
}

TEST_CASE("token budget") {
  const WhitespaceTokenizer words;
  const CharTokenizer chars;
  CHECK(words.tokenize("  a  b\tc\n").size() == 3);
  CHECK(chars.count("abc") == 3);

  const BudgetCheck b = token_budget_check("a b c", words, 3);
  CHECK(b.count == 3);
  CHECK(b.within_budget);
  CHECK_FALSE(token_budget_check("a b c d", words, 3).within_budget);
  CHECK_THROWS_AS(token_budget_check("a", words, 0), std::invalid_argument);

  // "### S" (2) + "### Human: Q" (3) + 256 + T + "### Assistant:" (2).
  const PromptRecord record{"S", {{Speaker::human, "Q"}}, 4};
  const std::size_t expected = 2 + 3 + 256 + 4 + 2;
  CHECK(token_budget_check(render_prompt(record), words).count == expected);
  CHECK_NOTHROW(render_prompt(record, {&words, expected}));
  CHECK_THROWS_AS(render_prompt(record, {&words, expected - 1}), CapacityError);
  const PromptRecord twenty{"S", {{Speaker::human, "Q"}}, 20};
  CHECK_NOTHROW(render_prompt(twenty, {&words, 2048}));
  CHECK_THROWS_AS(render_prompt(twenty, {&chars, 2048}), CapacityError);

  const PromptRecord long_video{"S", {{Speaker::human, "Q"}}, 2048};
  CHECK_THROWS_AS(render_prompt(long_video), CapacityError);
}
