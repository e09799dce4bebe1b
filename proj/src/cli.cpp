// SPDX-License-Identifier: Apache-2.0
#include "vidlm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vidlm/assembly.hpp"
#include "vidlm/chat_client.hpp"
#include "vidlm/dataset.hpp"
#include "vidlm/features.hpp"
#include "vidlm/judge.hpp"
#include "vidlm/mapping_parser.hpp"
#include "vidlm/ndjson.hpp"
#include "vidlm/param_io.hpp"
#include "vidlm/temporal.hpp"
#include "vidlm/trainer.hpp"

namespace vidlm::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Config file: a JSON object. Top-level keys set global options; an object
// under a command name sets that command's options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json root;
    try {
      root = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(root, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& node, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (it->is_object()) {
        auto next = parents;
        next.push_back(it.key());
        flatten(*it, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      out.push_back(std::move(item));
    }
  }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.emplace_back(trim(line));
  }
  return lines;
}

void write_json_file(const std::string& path, const ordered_json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << value.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string string_field(const json& row, const char* key, std::string fallback = {}) {
  const auto it = row.find(key);
  if (it == row.end() || it->is_null()) return fallback;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw std::invalid_argument(std::string("field '") + key + "' must be a string");
}

// Runs fn(k) for k in [0, count) on up to jobs threads.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) fn(k);
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), count);
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

struct EndpointFlags {
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  int timeout_s = 60;
  std::size_t jobs = 1;
};

void add_endpoint_flags(CLI::App* cmd, EndpointFlags& f) {
  cmd->add_option("--endpoint", f.endpoint, "Chat-completion URL");
  cmd->add_option("--model", f.model, "Model name sent with each request")->capture_default_str();
  cmd->add_option("--timeout", f.timeout_s, "Per-request timeout in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", f.jobs, "Concurrent requests")->capture_default_str()->check(CLI::PositiveNumber);
}

struct RemoteClient {
  HttpChatClient http;
  RetryingChatClient retrying;

  explicit RemoteClient(const EndpointFlags& f)
      : http(HttpChatOptions{f.endpoint, f.model, token_from_env(), std::chrono::seconds(f.timeout_s)}),
        retrying(http, RetryPolicy{}) {}
};

// ---------------------------------------------------------------------------

struct BuildAlignmentArgs {
  std::string corpus;
  std::string out;
  std::string questions;
  std::string stats;
  std::size_t threshold = kDefaultFrequencyThreshold;
  long long cap = kDefaultCaptionCap;
  long long seed = kDefaultSeed;
};

int build_alignment(const BuildAlignmentArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<CaptionEntry> corpus;
  const auto rows = read_ndjson(std::filesystem::path(a.corpus));
  for (std::size_t k = 0; k < rows.size(); ++k) corpus.push_back(caption_entry_from_json(rows[k]));

  std::vector<std::string> bank = a.questions.empty() ? default_alignment_questions() : read_lines(a.questions);
  const NounPhraseChunker chunker;
  const auto candidates = build_candidate_set(corpus, chunker, a.threshold);
  std::vector<std::size_t> contributed;
  const auto selected = select_alignment_captions(candidates, a.cap, static_cast<std::uint64_t>(a.seed), &contributed);

  std::unordered_map<std::string, const CaptionEntry*> by_id;
  for (const auto& e : corpus) by_id.emplace(e.id, &e);
  std::vector<ordered_json> records;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto record = make_alignment_record(*by_id.at(selected[k]), bank, splitmix64(static_cast<std::uint64_t>(a.seed) + k));
    records.push_back(to_json(record));
  }
  write_ndjson(std::filesystem::path(a.out), records);

  if (!a.stats.empty()) {
    ordered_json stats = ordered_json::array();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      ordered_json row;
      row["phrase"] = candidates[k].phrase;
      row["frequency"] = candidates[k].frequency;
      row["selected"] = contributed[k];
      stats.push_back(std::move(row));
    }
    write_json_file(a.stats, stats);
  }
  err << "phrases retained: " << candidates.size() << ", records written: " << records.size() << '\n';
  out << records.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenInstructArgs {
  std::string kind;
  std::string in;
  std::string out;
  bool dry_run = false;
  long long seed = kDefaultSeed;
  EndpointFlags endpoint;
};

int gen_instruct(const GenInstructArgs& a, std::ostream&, std::ostream& err) {
  const InstructKind kind = parse_instruct_kind(a.kind);
  const auto rows = read_ndjson(std::filesystem::path(a.in));
  std::vector<InstructSource> sources;
  std::vector<InstructRequest> requests;
  for (const auto& row : rows) {
    if (!row.is_object()) throw std::invalid_argument("input rows must be JSON objects");
    InstructSource src;
    src.id = string_field(row, "id");
    if (src.id.empty()) throw std::invalid_argument("input row without id");
    src.v_id = string_field(row, "v_id", src.id);
    src.video = string_field(row, "video");
    src.source = string_field(row, "source");
    sources.push_back(src);
    requests.push_back(make_instruct_request(kind, string_field(row, "title"), string_field(row, "caption")));
  }

  std::vector<ordered_json> output;
  if (a.dry_run) {
    for (std::size_t k = 0; k < requests.size(); ++k) {
      ordered_json row;
      row["id"] = sources[k].id;
      row["kind"] = to_string(kind);
      row["messages"] = ordered_json::array();
      for (const auto& m : to_messages(requests[k])) row["messages"].push_back({{"role", m.role}, {"content", m.content}});
      output.push_back(std::move(row));
    }
    write_ndjson(std::filesystem::path(a.out), output);
    return kExitOk;
  }

  if (a.endpoint.endpoint.empty()) throw CLI::RequiredError("--endpoint (or --dry-run)");
  RemoteClient client(a.endpoint);
  std::vector<std::optional<InstructRecord>> records(requests.size());
  std::vector<std::string> errors(requests.size());
  parallel_for(requests.size(), a.endpoint.jobs, [&](std::size_t k) {
    try {
      const std::string raw = client.retrying.complete(to_messages(requests[k]));
      const InstructResponse response = parse_instruct_response(kind, raw);
      records[k] = make_instruct_record(sources[k], kind, response, default_detail_questions(),
                                        splitmix64(static_cast<std::uint64_t>(a.seed) + k));
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  std::size_t failed = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k]) {
      output.push_back(to_json(*records[k]));
    } else {
      ++failed;
      err << "item " << sources[k].id << ": " << errors[k] << '\n';
    }
  }
  write_ndjson(std::filesystem::path(a.out), output);
  return failed == 0 ? kExitOk : kExitDomainError;
}

// ---------------------------------------------------------------------------

struct TrainToyArgs {
  std::string variant = "v1";
  long long seed = kDefaultSeed;
  std::size_t examples = 8;
  std::size_t frames = 3;
  ToyDims dims;
  std::optional<std::size_t> stage1_steps;
  std::optional<std::size_t> stage2_steps;
  std::optional<double> stage1_lr;
  std::optional<double> stage2_lr;
  bool freeze_temporal_stage1 = false;
  bool stage2_alternate_lr = false;
  std::string report;
  std::string checkpoint;
};

int train_toy_cmd(const TrainToyArgs& a, std::ostream& out, std::ostream&) {
  const auto seed = static_cast<std::uint64_t>(a.seed);
  ToyDims dims = a.dims;
  dims.max_frames = std::max(dims.max_frames, a.frames);
  ToyModel model = init_toy_model(parse_temporal_variant(a.variant), dims, seed);
  const auto data = make_toy_dataset(a.examples, dims, a.frames, splitmix64(seed ^ 0x5eedULL));

  std::vector<StageConfig> stages{build_stage_config(1, !a.freeze_temporal_stage1), build_stage_config(2)};
  if (a.stage2_alternate_lr) stages[1].learning_rate = kStage2AlternateLearningRate;
  stages[0].steps = a.stage1_steps;
  stages[1].steps = a.stage2_steps;
  if (a.stage1_lr) stages[0].learning_rate = *a.stage1_lr;
  if (a.stage2_lr) stages[1].learning_rate = *a.stage2_lr;

  const TrainReport report = train_toy(model, data, stages, seed);
  if (!a.report.empty()) write_json_file(a.report, to_json(report));
  if (!a.checkpoint.empty()) {
    std::vector<ConstParamView> views;
    model.collect(views);
    save_params(a.checkpoint, snapshot(views));
  }
  for (int stage : {1, 2}) {
    std::size_t count = 0;
    double first = 0.0;
    double last = 0.0;
    for (const auto& s : report.steps) {
      if (s.stage != stage) continue;
      if (count++ == 0) first = s.loss;
      last = s.loss;
    }
    out << "stage " << stage << ": steps " << count << ", loss " << first << " -> " << last << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalQaArgs {
  std::string in;
  std::string out;
  std::string summary;
  std::string responses;
  EndpointFlags endpoint;
};

int eval_qa(const EvalQaArgs& a, std::ostream& out, std::ostream& err) {
  const auto rows = read_ndjson(std::filesystem::path(a.in));
  std::vector<QaItem> items;
  for (const auto& row : rows) {
    if (!row.is_object()) throw std::invalid_argument("input rows must be JSON objects");
    items.push_back({string_field(row, "question"), string_field(row, "answer"), string_field(row, "prediction")});
  }
  if (items.empty()) throw std::invalid_argument("no QA items in " + a.in);

  std::vector<JudgeOutcome> outcomes;
  if (!a.responses.empty()) {
    // Replay previously collected judge replies, one JSON string (or
    // {"response": ...} object) per line, in input order.
    const auto replies = read_ndjson(std::filesystem::path(a.responses));
    if (replies.size() != items.size()) {
      throw std::invalid_argument("response count " + std::to_string(replies.size()) + " does not match item count " +
                                  std::to_string(items.size()));
    }
    for (const auto& reply : replies) {
      JudgeOutcome o;
      o.raw = reply.is_string() ? reply.get<std::string>() : string_field(reply, "response");
      try {
        o.verdict = parse_verdict(o.raw);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      outcomes.push_back(std::move(o));
    }
  } else {
    if (a.endpoint.endpoint.empty()) throw CLI::RequiredError("--endpoint (or --responses)");
    RemoteClient client(a.endpoint);
    outcomes = run_qa_judge(items, client.retrying, a.endpoint.jobs);
  }

  std::vector<ordered_json> lines;
  std::vector<JudgeVerdict> verdicts;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    ordered_json row;
    if (outcomes[k].verdict) {
      row["pred"] = outcomes[k].verdict->pred == Verdict::yes ? "yes" : "no";
      row["score"] = outcomes[k].verdict->score;
      verdicts.push_back(*outcomes[k].verdict);
    } else {
      row["error"] = outcomes[k].error;
      err << "item " << k + 1 << ": " << outcomes[k].error << '\n';
    }
    lines.push_back(std::move(row));
  }
  write_ndjson(std::filesystem::path(a.out), lines);
  if (verdicts.empty()) throw std::runtime_error("no item was judged successfully");

  const EvalMetrics m = aggregate_qa(verdicts);
  ordered_json summary;
  summary["n"] = m.n;
  summary["accuracy"] = m.accuracy;
  summary["mean_score"] = m.mean_score;
  if (!a.summary.empty()) write_json_file(a.summary, summary);
  out << summary.dump() << '\n';
  return verdicts.size() == outcomes.size() ? kExitOk : kExitDomainError;
}

// ---------------------------------------------------------------------------

struct DemoArgs {
  std::string variant = "v1";
  std::size_t frames = 3;
  std::size_t dim = 4;
  std::size_t llm_dim = 0;
  long long seed = kDefaultSeed;
};

int demo_forward(const DemoArgs& a, std::ostream& out, std::ostream&) {
  const auto seed = static_cast<std::uint64_t>(a.seed);
  // Sampling at 0.5 fps from a 1 fps clip keeps every second frame.
  const auto video = make_synthetic_video(static_cast<std::int64_t>(2 * a.frames - 1), 1.0, 8, 8, 3, seed);
  const auto indices = sample_frame_indices(video.frame_count, video.native_fps);
  const MockEncoder encoder(a.dim, seed);
  const VideoFeatures features = encode_frames(video, indices, encoder);

  const auto params = init_temporal_params(parse_temporal_variant(a.variant), a.dim, std::max<std::size_t>(16, a.frames), seed);
  const AggregatedPatches aggregated = aggregate(features, params);
  const VideoTokenSequence sequence = assemble_video_tokens(aggregated, features);
  out << "frames: " << features.frame_count() << '\n';
  out << "aggregated: " << aggregated.patches.rows() << " x " << aggregated.patches.cols() << '\n';
  out << "tokens: " << sequence.tokens.rows() << " x " << sequence.tokens.cols() << '\n';
  const std::size_t llm_dim = a.llm_dim == 0 ? a.dim : a.llm_dim;
  const Matrix projected = project_tokens(sequence, init_projection(a.dim, llm_dim, seed));
  out << "projected: " << projected.rows() << " x " << projected.cols() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Video-language pipeline tools", "vidlm");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  const std::vector<std::string> variants{"v1", "v2", "v3"};

  BuildAlignmentArgs ba;
  auto* cmd_ba = app.add_subcommand("build-alignment", "Filter a caption corpus into alignment records");
  cmd_ba->add_option("--corpus", ba.corpus, "NDJSON rows with id, video, caption")->required()->check(CLI::ExistingFile);
  cmd_ba->add_option("--out", ba.out, "NDJSON output records")->required();
  cmd_ba->add_option("--threshold", ba.threshold, "Keep phrases seen in more captions than this")->capture_default_str();
  cmd_ba->add_option("--cap", ba.cap, "Captions sampled per phrase")->capture_default_str()->check(CLI::PositiveNumber);
  cmd_ba->add_option("--seed", ba.seed)->capture_default_str();
  cmd_ba->add_option("--questions", ba.questions, "Question bank, one per line")->check(CLI::ExistingFile);
  cmd_ba->add_option("--stats", ba.stats, "JSON file listing retained phrases");

  GenInstructArgs gi;
  auto* cmd_gi = app.add_subcommand("gen-instruct", "Generate instruction records through a chat model");
  cmd_gi->add_option("--kind", gi.kind)->required()->check(
      CLI::IsMember({"detail_description", "conversation", "complex_reasoning"}));
  cmd_gi->add_option("--in", gi.in, "NDJSON rows with id, video, title, caption")->required()->check(CLI::ExistingFile);
  cmd_gi->add_option("--out", gi.out)->required();
  cmd_gi->add_flag("--dry-run", gi.dry_run, "Write the requests instead of sending them");
  cmd_gi->add_option("--seed", gi.seed)->capture_default_str();
  add_endpoint_flags(cmd_gi, gi.endpoint);

  TrainToyArgs tt;
  auto* cmd_tt = app.add_subcommand("train-toy", "Run the two-stage recipe on a synthetic toy model");
  cmd_tt->add_option("--variant", tt.variant)->capture_default_str()->check(CLI::IsMember(variants));
  cmd_tt->add_option("--seed", tt.seed)->capture_default_str();
  cmd_tt->add_option("--examples", tt.examples)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_tt->add_option("--frames", tt.frames)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_tt->add_option("--dim", tt.dims.dim)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_tt->add_option("--llm-dim", tt.dims.llm_dim)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_tt->add_option("--vocab", tt.dims.vocab)->capture_default_str()->check(CLI::Range(8, 4096));
  cmd_tt->add_option("--stage1-steps", tt.stage1_steps)->check(CLI::PositiveNumber);
  cmd_tt->add_option("--stage2-steps", tt.stage2_steps)->check(CLI::PositiveNumber);
  cmd_tt->add_option("--stage1-lr", tt.stage1_lr)->check(CLI::NonNegativeNumber);
  auto* lr2 = cmd_tt->add_option("--stage2-lr", tt.stage2_lr)->check(CLI::NonNegativeNumber);
  cmd_tt->add_flag("--stage2-lr-2e-5", tt.stage2_alternate_lr, "Use 2e-5 instead of 5e-5 for stage 2")->excludes(lr2);
  cmd_tt->add_flag("--freeze-temporal-stage1", tt.freeze_temporal_stage1);
  cmd_tt->add_option("--report", tt.report, "JSON training report");
  cmd_tt->add_option("--checkpoint", tt.checkpoint, "Parameter file written after training");

  EvalQaArgs eq;
  auto* cmd_eq = app.add_subcommand("eval-qa", "Judge QA predictions and aggregate accuracy and score");
  cmd_eq->add_option("--in", eq.in, "NDJSON rows with question, answer, prediction")->required()->check(CLI::ExistingFile);
  cmd_eq->add_option("--out", eq.out, "NDJSON verdicts")->required();
  cmd_eq->add_option("--summary", eq.summary, "JSON summary file");
  auto* responses = cmd_eq->add_option("--responses", eq.responses, "Recorded judge replies (NDJSON)")->check(CLI::ExistingFile);
  add_endpoint_flags(cmd_eq, eq.endpoint);
  cmd_eq->get_option("--endpoint")->excludes(responses);

  DemoArgs dm;
  auto* cmd_dm = app.add_subcommand("demo-forward", "Print token shapes for a synthetic video");
  cmd_dm->add_option("--variant", dm.variant)->capture_default_str()->check(CLI::IsMember(variants));
  cmd_dm->add_option("--frames", dm.frames)->capture_default_str()->check(CLI::Range(1, 4096));
  cmd_dm->add_option("--dim", dm.dim)->capture_default_str()->check(CLI::PositiveNumber);
  cmd_dm->add_option("--llm-dim", dm.llm_dim, "Projected width (defaults to --dim)");
  cmd_dm->add_option("--seed", dm.seed)->capture_default_str();

  if (!args.empty() && !args.front().starts_with("-") && app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown command '" << args.front() << "'\n\n" << app.help();
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*cmd_ba) return build_alignment(ba, out, err);
    if (*cmd_gi) return gen_instruct(gi, out, err);
    if (*cmd_tt) return train_toy_cmd(tt, out, err);
    if (*cmd_eq) return eval_qa(eq, out, err);
    if (*cmd_dm) return demo_forward(dm, out, err);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, std::cout, std::cerr);
}

}  // namespace vidlm::cli
