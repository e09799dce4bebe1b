#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include "golden.hpp"
#include "golden_cases.hpp"
#include "oracles.hpp"
#include "vidlm/errors.hpp"
#include "vidlm/judge.hpp"
#include "vidlm/rng.hpp"

using namespace vidlm;

TEST_CASE("judge transcripts match goldens") {
  for (const auto& [name, text] : testdata::golden_cases()) {
    if (!name.starts_with("judge_")) continue;
    std::string why;
    CHECK_MESSAGE(testdata::matches_golden(name, text, &why), why);
  }
}

TEST_CASE("prompt substitution") {
  const std::string user(qa_judge_user_template());
  CHECK(oracle::count_substring(user, "{question}") == 1);
  CHECK(oracle::count_substring(user, "{answer}") == 1);
  CHECK(oracle::count_substring(user, "{pred}") == 1);

  const JudgePrompt p = build_qa_judge_prompt("Q {answer}?", "A", "{pred}");
  CHECK(p.system == qa_judge_system_template());
  CHECK(p.user.find("Q {answer}?") != std::string::npos);
  CHECK(p.user.find("{question}") == std::string::npos);
  CHECK(oracle::count_substring(p.user, "{pred}") == 1);

  CHECK_THROWS_AS(build_qa_judge_prompt("", "A", "P"), std::invalid_argument);
  CHECK_THROWS_AS(build_qa_judge_prompt("Q", "", "P"), std::invalid_argument);
  CHECK_THROWS_AS(build_qa_judge_prompt("Q", "A", ""), std::invalid_argument);
}

TEST_CASE("verdict battery") {
  const auto battery = nlohmann::json::parse(testdata::read_file(testdata::root() / "fixtures" / "verdict_battery.json"));
  for (const auto& c : battery) {
    const std::string raw = c.at("raw").get<std::string>();
    CAPTURE(raw);
    if (c.contains("error")) {
      CHECK_THROWS(parse_verdict(raw));
      continue;
    }
    const JudgeVerdict v = parse_verdict(raw);
    CHECK((v.pred == Verdict::yes) == (c.at("pred").get<std::string>() == "yes"));
    CHECK(v.score == c.at("score").get<double>());
  }
}

TEST_CASE("render and parse round trip") {
  CHECK(render_verdict({Verdict::yes, 4.8}) == "{'pred': 'yes', 'score': 4.8}");
  CHECK(render_verdict({Verdict::no, 0.0}) == "{'pred': 'no', 'score': 0}");
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    const JudgeVerdict v{uniform01(rng) < 0.5 ? Verdict::yes : Verdict::no, uniform(rng, 0.0, kMaxScore)};
    CHECK(parse_verdict(render_verdict(v)) == v);
  }
}

TEST_CASE("aggregation") {
  const std::vector<JudgeVerdict> v{{Verdict::yes, 5}, {Verdict::no, 1}, {Verdict::yes, 3}, {Verdict::no, 2}};
  const EvalMetrics m = aggregate_qa(v);
  CHECK(m.n == 4);
  CHECK(m.accuracy == 0.5);
  CHECK(m.mean_score == 2.75);
  CHECK_THROWS_AS(aggregate_qa({}), std::invalid_argument);

  Rng rng(9);
  std::vector<JudgeVerdict> many;
  for (int k = 0; k < 200; ++k)
    many.push_back({uniform01(rng) < 0.3 ? Verdict::yes : Verdict::no, std::round(uniform(rng, 0.0, 5.0))});
  const EvalMetrics base = aggregate_qa(many);
  CHECK(base.accuracy >= 0.0);
  CHECK(base.accuracy <= 1.0);
  CHECK(base.mean_score <= kMaxScore);
  for (int k = 0; k < 5; ++k) {
    shuffle(many, rng);
    const EvalMetrics m2 = aggregate_qa(many);
    CHECK(m2.accuracy == doctest::Approx(base.accuracy).epsilon(1e-12));
    CHECK(m2.mean_score == doctest::Approx(base.mean_score).epsilon(1e-12));
  }
}

TEST_CASE("aspect prompts") {
  std::set<std::string> systems;
  std::set<std::string> users;
  for (const char* code : {"COR", "DO", "CU", "TU", "CON"}) {
    const Aspect a = parse_aspect(code);
    CHECK(aspect_code(a) == code);
    const JudgePrompt p = build_aspect_prompt(a, "Q", "A", "P");
    systems.insert(p.system);
    users.insert(p.user);
    CHECK(p.system.starts_with(qa_judge_system_template()));
    CHECK(p.user.find("Rate the predicted answer for " + std::string(aspect_name(a)) + ".") != std::string::npos);
  }
  CHECK(systems.size() == 5);
  CHECK(users.size() == 5);
  CHECK(build_aspect_prompt(Aspect::correctness, "Q", "A", "P").system.find("correctness") != std::string::npos);
  CHECK_THROWS_AS(parse_aspect("cor"), std::invalid_argument);
}

TEST_CASE("batch judging keeps input order") {
  std::vector<QaItem> items;
  for (int k = 0; k < 40; ++k) items.push_back({"question " + std::to_string(k), "A", "P"});
  std::mutex mu;
  std::set<std::thread::id> threads;
  StubChatClient client([&](const std::vector<ChatMessage>& messages) -> std::string {
    {
      std::lock_guard lock(mu);
      threads.insert(std::this_thread::get_id());
    }
    const std::string& user = messages.at(1).content;
    const auto at = user.find("question ");
    const int k = std::stoi(user.substr(at + 9));
    if (k % 10 == 7) return "no mapping here";
    if (k % 10 == 3) throw std::runtime_error("endpoint down");
    std::this_thread::sleep_for(std::chrono::microseconds(200 * (k % 5)));
    return render_verdict({k % 2 ? Verdict::yes : Verdict::no, static_cast<double>(k % 6)});
  });

  for (std::size_t jobs : {1, 4}) {
    const auto out = run_qa_judge(items, client, jobs);
    REQUIRE(out.size() == items.size());
    for (int k = 0; k < 40; ++k) {
      CAPTURE(k);
      if (k % 10 == 7 || k % 10 == 3) {
        CHECK_FALSE(out[k].verdict.has_value());
        CHECK_FALSE(out[k].error.empty());
        continue;
      }
      REQUIRE(out[k].verdict.has_value());
      CHECK(out[k].verdict->score == k % 6);
      CHECK((out[k].verdict->pred == Verdict::yes) == (k % 2 == 1));
    }
  }
  CHECK(threads.size() > 1);
  CHECK_THROWS_AS(run_qa_judge(items, client, 0), std::invalid_argument);
  CHECK(run_qa_judge({}, client, 4).empty());
}
