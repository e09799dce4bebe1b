// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidlm/chat_client.hpp"

namespace vidlm {

// ---------------------------------------------------------------------------
// Caption corpus and phrase filtering
// ---------------------------------------------------------------------------

struct CaptionEntry {
  std::string id;
  std::string video_path;
  std::string caption;
};

class PhraseExtractor {
 public:
  virtual ~PhraseExtractor() = default;
  virtual std::vector<std::string> extract(std::string_view caption) const = 0;
};

// Rule-based noun-phrase chunker over a small built-in lexicon. Emits
// maximal runs matching  determiner? adjective* noun+  with the determiner
// dropped. Unknown words are treated as nouns; -ing/-ed/-ly suffixes mark
// verbs and adverbs unless the lexicon says otherwise.
class NounPhraseChunker final : public PhraseExtractor {
 public:
  std::vector<std::string> extract(std::string_view caption) const override;
};

// Lowercased word tokens. Letters, digits, inner apostrophes and hyphens
// (and any non-ASCII byte) form words; everything else separates them.
std::vector<std::string> normalize_words(std::string_view text);

// Extractor output normalized (lowercase, single spaces) and deduplicated,
// in first-occurrence order.
std::vector<std::string> extract_phrases(std::string_view caption, const PhraseExtractor& extractor);

struct PhraseStats {
  std::string phrase;
  std::size_t frequency = 0;
  std::vector<std::string> caption_ids;  // corpus order; size() == frequency
};

inline constexpr std::size_t kDefaultFrequencyThreshold = 5;
inline constexpr std::int64_t kDefaultCaptionCap = 100;

// Phrases whose caption count is strictly greater than threshold, sorted
// ascending by frequency then lexicographically. A caption counts for a
// phrase when the phrase occurs in it as a case-insensitive whole-word match.
std::vector<PhraseStats> build_candidate_set(std::span<const CaptionEntry> corpus, const PhraseExtractor& extractor,
                                             std::size_t threshold = kDefaultFrequencyThreshold);

// Walks the candidates in order. Each phrase adds its not-yet-selected
// captions, or a seeded uniform sample of exactly cap of them when more
// remain. contributed, when given, receives the count added per phrase.
std::vector<std::string> select_alignment_captions(std::span<const PhraseStats> candidates,
                                                   std::int64_t cap, std::uint64_t seed,
                                                   std::vector<std::size_t>* contributed = nullptr);

// ---------------------------------------------------------------------------
// Training records
// ---------------------------------------------------------------------------

inline constexpr std::string_view kVideoMarker = "<video>";

struct ConversationTurn {
  std::string from;  // "human" or "gpt"
  std::string value;

  bool operator==(const ConversationTurn&) const = default;
};

struct AlignmentRecord {
  std::string id;
  std::string video;
  std::vector<ConversationTurn> conversations;

  void validate() const;
  bool operator==(const AlignmentRecord&) const = default;
};

struct InstructRecord {
  std::string id;
  std::string v_id;
  std::string video;
  std::string source;
  std::vector<ConversationTurn> conversations;

  void validate() const;
  bool operator==(const InstructRecord&) const = default;
};

const std::vector<std::string>& default_alignment_questions();
const std::vector<std::string>& default_detail_questions();

// Human turn: "<question>\n<video>", gpt turn: the caption verbatim.
AlignmentRecord make_alignment_record(const CaptionEntry& entry, std::span<const std::string> question_bank,
                                      std::uint64_t seed);

nlohmann::ordered_json to_json(const AlignmentRecord& record);
nlohmann::ordered_json to_json(const InstructRecord& record);
AlignmentRecord alignment_record_from_json(const nlohmann::json& j);
InstructRecord instruct_record_from_json(const nlohmann::json& j);

// Corpus rows carry "id" (string or integer), "video" and "caption".
CaptionEntry caption_entry_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Instruction-data generation requests
// ---------------------------------------------------------------------------

enum class InstructKind { detail_description, conversation, complex_reasoning };

InstructKind parse_instruct_kind(std::string_view name);
std::string_view to_string(InstructKind kind);

struct Exemplar {
  std::string user;
  std::string assistant;
};

struct InstructRequest {
  InstructKind kind = InstructKind::conversation;
  std::string system;
  std::vector<Exemplar> exemplars;
  std::string user_payload;  // "[title] <title> [Caption] <caption>"
};

std::string_view instruct_system_template(InstructKind kind);
std::vector<Exemplar> instruct_exemplars(InstructKind kind);
std::string instruct_user_payload(std::string_view title, std::string_view caption);

InstructRequest make_instruct_request(InstructKind kind, std::string_view title, std::string_view caption);

// system, then (user, assistant) per exemplar, then the user payload.
std::vector<ChatMessage> to_messages(const InstructRequest& request);

struct QaPair {
  std::string question;
  std::string answer;

  bool operator==(const QaPair&) const = default;
};

struct InstructResponse {
  std::vector<QaPair> pairs;              // conversation, complex_reasoning
  std::string description;                // detail_description
  std::vector<std::size_t> malformed_lines;  // 1-based, conversation only
};

// Throws ParseError (with offending line numbers) when nothing parses.
InstructResponse parse_instruct_response(InstructKind kind, std::string_view raw);

struct InstructSource {
  std::string id;
  std::string v_id;
  std::string video;
  std::string source;
};

// Turns a parsed response into a training record; "<video>\n" opens the first
// human turn. Detail descriptions get a seeded question from question_bank.
InstructRecord make_instruct_record(const InstructSource& meta, InstructKind kind, const InstructResponse& response,
                                    std::span<const std::string> question_bank, std::uint64_t seed);

// Role-tagged plain-text rendering of a message list, used for golden files.
std::string format_transcript(std::span<const ChatMessage> messages);

}  // namespace vidlm
