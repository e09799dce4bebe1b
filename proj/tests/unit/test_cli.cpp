#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "golden.hpp"
#include "oracles.hpp"
#include "vidlm/cli.hpp"
#include "vidlm/dataset.hpp"
#include "vidlm/ndjson.hpp"
#include "vidlm/param_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = vidlm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path = fs::temp_directory_path() / ("vidlm_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return file(name);
  }

  fs::path path;
  static inline int counter = 0;
};

std::string fixture(const std::string& name) { return (testdata::root() / "fixtures" / name).string(); }

// Union of caption ids over phrases whose padded-substring count exceeds 5.
std::size_t oracle_record_count() {
  std::vector<vidlm::CaptionEntry> corpus;
  for (const auto& row : vidlm::read_ndjson(fs::path(fixture("captions20.ndjson"))))
    corpus.push_back(vidlm::caption_entry_from_json(row));
  std::vector<std::string> captions;
  std::set<std::string> phrases;
  const vidlm::NounPhraseChunker chunker;
  for (const auto& e : corpus) {
    captions.push_back(e.caption);
    for (const auto& p : vidlm::extract_phrases(e.caption, chunker)) phrases.insert(p);
  }
  std::set<std::size_t> covered;
  for (const auto& p : phrases) {
    if (oracle::count_captions(captions, p) <= 5) continue;
    const std::string needle = oracle::padded_words(p);
    for (std::size_t k = 0; k < captions.size(); ++k)
      if (oracle::padded_words(captions[k]).find(needle) != std::string::npos) covered.insert(k);
  }
  return covered.size();
}

}  // namespace

TEST_CASE("exit-code battery") {
  TempDir tmp;
  const std::string qa = tmp.write("qa.ndjson", "{\"question\": \"Q\", \"answer\": \"A\", \"prediction\": \"P\"}\n");
  const std::string titled = tmp.write("titled.ndjson", "{\"id\": \"a\", \"title\": \"T\", \"caption\": \"C\"}\n");
  const std::string bad_json = tmp.write("bad.ndjson", "{oops\n");
  struct Case {
    std::vector<std::string> args;
    int code;
  };
  const std::vector<Case> cases{
      {{}, 2},
      {{"--help"}, 0},
      {{"frobnicate"}, 2},
      {{"demo-forward", "--bogus"}, 2},
      {{"demo-forward", "--frames", "0"}, 2},
      {{"demo-forward", "--variant", "v9"}, 2},
      {{"demo-forward", "--frames", "lots"}, 2},
      {{"demo-forward"}, 0},
      {{"demo-forward", "--help"}, 0},
      {{"build-alignment", "--out", tmp.file("x")}, 2},
      {{"build-alignment", "--corpus", tmp.file("missing"), "--out", tmp.file("x")}, 2},
      {{"build-alignment", "--corpus", bad_json, "--out", tmp.file("x")}, 1},
      {{"build-alignment", "--corpus", fixture("captions20.ndjson"), "--out", tmp.file("x"), "--cap", "0"}, 2},
      {{"gen-instruct", "--kind", "poetry", "--in", qa, "--out", tmp.file("y")}, 2},
      {{"gen-instruct", "--kind", "conversation", "--in", titled, "--out", tmp.file("y")}, 2},
      {{"gen-instruct", "--kind", "conversation", "--in", qa, "--out", tmp.file("y"), "--dry-run"}, 1},
      {{"eval-qa", "--in", qa, "--out", tmp.file("z")}, 2},
      {{"train-toy", "--examples", "0"}, 2},
      {{"train-toy", "--stage2-lr", "1e-4", "--stage2-lr-2e-5"}, 2},
      {{"train-toy", "--vocab", "4"}, 2},
  };
  for (const auto& c : cases) {
    std::string joined;
    for (const auto& a : c.args) joined += a + " ";
    CAPTURE(joined);
    const Result r = run(c.args);
    CHECK(r.code == c.code);
    if (c.code == 2) CHECK_FALSE(r.err.empty());
  }
  const Result unknown = run({"frobnicate"});
  CHECK(unknown.err.find("unknown command") != std::string::npos);
  CHECK(unknown.err.find("demo-forward") != std::string::npos);
}

TEST_CASE("demo-forward shapes") {
  const Result r = run({"demo-forward", "--variant", "v1", "--frames", "3", "--dim", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("tokens: 259 x 4\n") != std::string::npos);
  CHECK(r.out.find("frames: 3\n") != std::string::npos);
  const Result v3 = run({"demo-forward", "--variant", "v3", "--frames", "5", "--dim", "6", "--llm-dim", "10"});
  REQUIRE(v3.code == 0);
  CHECK(v3.out.find("tokens: 261 x 6\n") != std::string::npos);
  CHECK(v3.out.find("projected: 261 x 10\n") != std::string::npos);
  CHECK(run({"demo-forward", "--variant", "v3", "--frames", "5", "--dim", "6"}).out == run({"demo-forward", "--variant", "v3", "--frames", "5", "--dim", "6"}).out);
}

TEST_CASE("build-alignment matches the oracle count") {
  TempDir tmp;
  const std::string out_path = tmp.file("align.ndjson");
  const Result r = run({"build-alignment", "--corpus", fixture("captions20.ndjson"), "--out", out_path, "--stats",
                        tmp.file("stats.json")});
  REQUIRE(r.code == 0);
  const std::size_t expected = oracle_record_count();
  CHECK(expected > 0);
  const auto rows = vidlm::read_ndjson(fs::path(out_path));
  CHECK(rows.size() == expected);
  CHECK(r.out == std::to_string(expected) + "\n");
  for (const auto& row : rows) CHECK_NOTHROW(vidlm::alignment_record_from_json(row));

  const std::string again = tmp.file("again.ndjson");
  REQUIRE(run({"build-alignment", "--corpus", fixture("captions20.ndjson"), "--out", again}).code == 0);
  CHECK(testdata::read_file(again) == testdata::read_file(out_path));

  const auto stats = nlohmann::json::parse(testdata::read_file(tmp.file("stats.json")));
  CHECK(stats.size() >= 2);
  for (const auto& s : stats) CHECK(s["frequency"].get<int>() > 5);
}

TEST_CASE("gen-instruct dry run") {
  TempDir tmp;
  const std::string in = tmp.write(
      "in.ndjson", "{\"id\": \"a\", \"video\": \"a.mp4\", \"title\": \"T\", \"caption\": \"C\"}\n"
                   "{\"id\": \"b\", \"video\": \"b.mp4\", \"title\": \"T2\", \"caption\": \"C2\"}\n");
  const Result r = run({"gen-instruct", "--kind", "complex_reasoning", "--in", in, "--out", tmp.file("o"), "--dry-run"});
  REQUIRE(r.code == 0);
  const auto rows = vidlm::read_ndjson(fs::path(tmp.file("o")));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1]["id"] == "b");
  CHECK(rows[1]["kind"] == "complex_reasoning");
  CHECK(rows[1]["messages"].back()["content"] == "[title] T2 [Caption] C2");
  CHECK(rows[1]["messages"].front()["role"] == "system");
}

TEST_CASE("eval-qa replays recorded replies") {
  TempDir tmp;
  const std::string in = tmp.write("in.ndjson",
                                   "{\"question\": \"Q1\", \"answer\": \"A\", \"prediction\": \"P\"}\n"
                                   "{\"question\": \"Q2\", \"answer\": \"A\", \"prediction\": \"P\"}\n"
                                   "{\"question\": \"Q3\", \"answer\": \"A\", \"prediction\": \"P\"}\n");
  const std::string good = tmp.write("good.ndjson",
                                     "\"{'pred': 'yes', 'score': 5}\"\n"
                                     "{\"response\": \"{'pred': 'no', 'score': 1}\"}\n"
                                     "\"{'pred': 'yes', 'score': 3}\"\n");
  const Result r = run({"eval-qa", "--in", in, "--out", tmp.file("v"), "--responses", good, "--summary", tmp.file("s")});
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(testdata::read_file(tmp.file("s")));
  CHECK(summary["n"] == 3);
  CHECK(summary["accuracy"].get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(summary["mean_score"].get<double>() == doctest::Approx(3.0));

  const std::string partial = tmp.write("partial.ndjson",
                                        "\"{'pred': 'yes', 'score': 5}\"\n\"I cannot judge this.\"\n\"{'pred': 'no', 'score': 0}\"\n");
  const Result p = run({"eval-qa", "--in", in, "--out", tmp.file("v2"), "--responses", partial});
  CHECK(p.code == 1);
  const auto lines = vidlm::read_ndjson(fs::path(tmp.file("v2")));
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].contains("error"));
  CHECK(lines[2]["pred"] == "no");

  const std::string short_file = tmp.write("short.ndjson", "\"{'pred': 'yes', 'score': 5}\"\n");
  CHECK(run({"eval-qa", "--in", in, "--out", tmp.file("v3"), "--responses", short_file}).code == 1);
}

TEST_CASE("train-toy, checkpoints and config precedence") {
  TempDir tmp;
  const std::vector<std::string> base{"train-toy", "--variant", "v2", "--examples", "4", "--frames", "2", "--dim",
                                      "4", "--llm-dim", "8", "--vocab", "16", "--stage1-steps", "3", "--stage2-steps",
                                      "2"};
  std::vector<std::string> args = base;
  args.insert(args.end(), {"--report", tmp.file("r.json"), "--checkpoint", tmp.file("p.bin")});
  const Result r = run(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("stage 1: steps 3") != std::string::npos);
  CHECK(r.out.find("stage 2: steps 2") != std::string::npos);
  const auto report = nlohmann::json::parse(testdata::read_file(tmp.file("r.json")));
  CHECK(report["steps"].size() == 5);
  CHECK_FALSE(vidlm::load_params(tmp.file("p.bin")).empty());
  CHECK(run(base).out == r.out);

  const std::string config = tmp.write("cfg.json", R"({"demo-forward": {"variant": "v2", "frames": 4, "dim": 5}})");
  const Result from_config = run({"--config", config, "demo-forward"});
  REQUIRE(from_config.code == 0);
  CHECK(from_config.out.find("tokens: 260 x 5") != std::string::npos);
  const Result overridden = run({"--config", config, "demo-forward", "--frames", "2"});
  CHECK(overridden.out.find("tokens: 258 x 5") != std::string::npos);
}

TEST_CASE("installed binary exit codes") {
  const char* bin = std::getenv("VIDLM_CLI");
  if (bin == nullptr) return;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("") == 2);
  CHECK(status("frobnicate") == 2);
  CHECK(status("demo-forward --frames 2") == 0);
  CHECK(status("build-alignment --corpus " + fixture("captions20.ndjson") + " --out /nonexistent-dir/x.ndjson") == 1);
}
