// SPDX-License-Identifier: Apache-2.0
#include "vidlm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "vidlm/errors.hpp"
#include "vidlm/mapping_parser.hpp"
#include "vidlm/rng.hpp"

namespace vidlm {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

enum class Tag { determiner, adjective, noun, other };

const std::unordered_set<std::string_view>& determiners() {
  static const std::unordered_set<std::string_view> words = {
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "his", "her",
      "its", "their", "our", "my", "your", "no", "another", "several", "many", "few", "both", "all",
      "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "much", "more",
      "most", "other", "such", "what", "which", "whose"};
  return words;
}

const std::unordered_set<std::string_view>& adjectives() {
  static const std::unordered_set<std::string_view> words = {
      "young", "old", "new", "small", "big", "large", "little", "tiny", "huge", "giant", "tall", "short",
      "long", "wide", "narrow", "high", "low", "deep", "beautiful", "pretty", "handsome", "ugly", "cute",
      "happy", "sad", "angry", "funny", "serious", "calm", "quiet", "loud", "busy", "empty", "full",
      "white", "black", "red", "blue", "green", "yellow", "brown", "gray", "grey", "orange", "pink",
      "purple", "golden", "silver", "dark", "bright", "light", "colorful", "hot", "cold", "warm", "cool",
      "wet", "dry", "clean", "dirty", "fresh", "modern", "ancient", "rural", "urban", "wooden", "metal",
      "plastic", "glass", "personal", "professional", "senior", "adult", "female", "male", "asian",
      "african", "european", "american", "caucasian", "beautiful", "slow", "fast", "quick", "sunny",
      "cloudy", "rainy", "snowy", "foggy", "green", "natural", "aerial", "abstract", "digital", "blurred",
      "blurry", "close", "open", "closed", "real", "traditional", "local", "public", "private", "famous",
      "scenic", "rocky", "sandy", "tropical", "wild", "domestic", "smart", "elderly", "middle-aged",
      "teenage", "attractive", "confident", "tired", "stylish", "vintage", "retro", "top", "front",
      "back", "side", "first", "last", "next", "single", "double", "whole", "fine", "good", "great",
      "best", "nice", "cozy", "heavy", "soft", "hard", "strong", "thin", "thick", "fat", "slim", "blond",
      "blonde", "curly", "sweet", "delicious", "healthy", "medical", "creative", "busy", "various",
      "different", "same", "amber", "crimson", "cobalt", "ivory", "scarlet", "violet", "teal"};
  return words;
}

// Words that look like verbs/adverbs by suffix but are nouns.
const std::unordered_set<std::string_view>& noun_exceptions() {
  static const std::unordered_set<std::string_view> words = {
      "building", "evening", "morning", "ceiling", "clothing", "painting", "wedding", "meeting", "ring",
      "king", "thing", "string", "spring", "wing", "swing", "sibling", "ingredient", "bed", "shed",
      "sled", "seed", "steed", "reed", "weed", "speed", "feed", "need", "family", "belly", "lily", "jelly",
      "fly", "butterfly", "rally", "valley", "alley", "trolley", "pudding", "landing", "parking",
      "ceiling", "railing", "stuffing", "frosting", "filling", "drawing", "sibling", "dumpling",
      "pudding", "lightning", "offspring", "sapling", "duckling", "kingpin", "fishing", "hiking",
      "surfing", "skiing", "boxing", "camping", "shopping", "cooking", "dancing", "bowling", "sled"};
  return words;
}

const std::unordered_set<std::string_view>& other_words() {
  static const std::unordered_set<std::string_view> words = {
      // prepositions and conjunctions
      "on", "in", "at", "of", "to", "from", "with", "without", "by", "for", "into", "onto", "over",
      "under", "above", "below", "behind", "beside", "between", "near", "through", "across", "along",
      "around", "about", "after", "before", "during", "against", "among", "toward", "towards", "upon",
      "off", "out", "up", "down", "and", "or", "but", "nor", "so", "yet", "while", "as", "than", "then",
      "if", "because", "when", "where", "who", "whom", "how", "why", "there", "here", "via", "within",
      // pronouns
      "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "himself", "herself",
      "itself", "themselves", "someone", "something", "everyone", "everything", "nothing", "anyone",
      // auxiliaries and common verbs
      "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does", "did",
      "can", "could", "will", "would", "shall", "should", "may", "might", "must", "make", "makes",
      "take", "takes", "go", "goes", "get", "gets", "put", "puts", "see", "sees", "look", "looks",
      "sit", "sits", "stand", "stands", "walk", "walks", "run", "runs", "hold", "holds", "play", "plays",
      "eat", "eats", "drink", "drinks", "ride", "rides", "fly", "flies", "swim", "swims", "jump", "jumps",
      "smile", "smiles", "talk", "talks", "work", "works", "use", "uses", "give", "gives", "show",
      "shows", "move", "moves", "turn", "turns", "open", "opens", "pour", "pours", "cut", "cuts",
      "throw", "throws", "catch", "catches", "lie", "lies", "lay", "lays", "fall", "falls", "sing",
      "sings", "dance", "dances", "read", "reads", "write", "writes", "watch", "watches", "wear",
      "wears", "carry", "carries", "drive", "drives", "grow", "grows", "cook", "cooks", "laugh",
      "laughs", "pick", "picks", "swing", "swings", "hit", "hits", "spin", "spins",
      // adverbs
      "very", "too", "also", "just", "not", "only", "still", "again", "away", "together", "slowly",
      "quickly", "now", "then", "once", "always", "never", "often", "outside", "inside", "indoors",
      "outdoors", "home", "ago", "well"};
  return words;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

Tag tag_word(std::string_view w) {
  if (determiners().contains(w) || all_digits(w)) return Tag::determiner;
  if (adjectives().contains(w)) return Tag::adjective;
  if (noun_exceptions().contains(w)) return Tag::noun;
  if (other_words().contains(w)) return Tag::other;
  if (w.size() > 4 && (ends_with(w, "ing") || ends_with(w, "ed") || ends_with(w, "ly"))) return Tag::other;
  return Tag::noun;
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

std::string join(std::span<const std::string> words, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t k = begin; k < end; ++k) {
    if (k > begin) out += ' ';
    out += words[k];
  }
  return out;
}

std::string id_from_json(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw std::invalid_argument("record id must be a string or integer");
}

std::vector<ConversationTurn> turns_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("conversations must be an array");
  std::vector<ConversationTurn> out;
  for (const auto& t : j) out.push_back({t.at("from").get<std::string>(), t.at("value").get<std::string>()});
  return out;
}

ordered_json turns_to_json(const std::vector<ConversationTurn>& turns) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : turns) {
    ordered_json o;
    o["from"] = t.from;
    o["value"] = t.value;
    arr.push_back(std::move(o));
  }
  return arr;
}

void validate_turns(const std::vector<ConversationTurn>& turns) {
  if (turns.size() < 2) throw std::invalid_argument("a record needs at least one human and one gpt turn");
  for (std::size_t k = 0; k < turns.size(); ++k) {
    const char* expected = (k % 2 == 0) ? "human" : "gpt";
    if (turns[k].from != expected) throw std::invalid_argument("conversation turns must alternate human/gpt");
  }
  if (turns.front().value.find(kVideoMarker) == std::string::npos) {
    throw std::invalid_argument("first human turn must contain the <video> marker");
  }
}

std::optional<QaPair> qa_from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  auto get = [&j](const char* key) -> std::optional<std::string> {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (to_lower(it.key()) == key && it.value().is_string()) return std::string(trim(it.value().get<std::string>()));
    }
    return std::nullopt;
  };
  auto q = get("question");
  auto a = get("answer");
  if (!q || !a || q->empty() || a->empty()) return std::nullopt;
  return QaPair{*q, *a};
}

std::optional<QaPair> qa_from_mapping(std::string_view text) {
  const auto spans = find_brace_mappings(text);
  if (spans.size() != 1) return std::nullopt;
  const json parsed = json::parse(spans.front(), nullptr, false);
  if (!parsed.is_discarded()) return qa_from_json(parsed);
  try {
    const FlatMapping m = parse_flat_mapping(spans.front());
    const MappingValue* q = nullptr;
    const MappingValue* a = nullptr;
    for (const auto& [k, v] : m.entries) {
      const std::string key = to_lower(k);
      if (key == "question") q = &v;
      if (key == "answer") a = &v;
    }
    if (!q || !a) return std::nullopt;
    QaPair pair{std::string(trim(q->text)), std::string(trim(a->text))};
    if (pair.question.empty() || pair.answer.empty()) return std::nullopt;
    return pair;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word_byte(text[i])) ++i;
    std::string word;
    while (i < text.size()) {
      const char c = text[i];
      if (is_word_byte(c)) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        ++i;
      } else if ((c == '\'' || c == '-') && !word.empty() && i + 1 < text.size() && is_word_byte(text[i + 1])) {
        word += c;
        ++i;
      } else {
        break;
      }
    }
    if (!word.empty()) words.push_back(std::move(word));
  }
  return words;
}

std::vector<std::string> NounPhraseChunker::extract(std::string_view caption) const {
  const std::vector<std::string> words = normalize_words(caption);
  std::vector<std::string> phrases;
  std::size_t i = 0;
  while (i < words.size()) {
    const Tag tag = tag_word(words[i]);
    if (tag != Tag::adjective && tag != Tag::noun) {
      ++i;
      continue;
    }
    // adjective* noun+ ; an adjective after a noun starts a new chunk.
    const std::size_t start = i;
    while (i < words.size() && tag_word(words[i]) == Tag::adjective) ++i;
    const std::size_t nouns_begin = i;
    while (i < words.size() && tag_word(words[i]) == Tag::noun) ++i;
    if (i > nouns_begin) phrases.push_back(join(words, start, i));
  }
  return phrases;
}

std::vector<std::string> extract_phrases(std::string_view caption, const PhraseExtractor& extractor) {
  if (trim(caption).empty()) throw std::invalid_argument("caption is empty");
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const std::string& raw : extractor.extract(caption)) {
    const std::vector<std::string> words = normalize_words(raw);
    if (words.empty()) continue;
    std::string phrase = join(words, 0, words.size());
    if (seen.insert(phrase).second) out.push_back(std::move(phrase));
  }
  return out;
}

std::vector<PhraseStats> build_candidate_set(std::span<const CaptionEntry> corpus, const PhraseExtractor& extractor,
                                             std::size_t threshold) {
  if (corpus.empty()) throw std::invalid_argument("caption corpus is empty");

  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::vector<std::size_t>> matches;  // phrase -> caption indices
  std::set<std::size_t> lengths;
  for (const auto& entry : corpus) {
    if (!ids.insert(entry.id).second) throw std::invalid_argument("duplicate caption id: " + entry.id);
    for (std::string& phrase : extract_phrases(entry.caption, extractor)) {
      lengths.insert(static_cast<std::size_t>(std::count(phrase.begin(), phrase.end(), ' ')) + 1);
      matches.try_emplace(std::move(phrase));
    }
  }

  // Whole-word containment is a contiguous word n-gram match.
  for (std::size_t c = 0; c < corpus.size(); ++c) {
    const std::vector<std::string> words = normalize_words(corpus[c].caption);
    for (std::size_t n : lengths) {
      for (std::size_t start = 0; start + n <= words.size(); ++start) {
        auto it = matches.find(join(words, start, start + n));
        if (it == matches.end()) continue;
        auto& hits = it->second;
        if (hits.empty() || hits.back() != c) hits.push_back(c);
      }
    }
  }

  std::vector<PhraseStats> out;
  for (auto& [phrase, hits] : matches) {
    if (hits.size() <= threshold) continue;
    PhraseStats stats{phrase, hits.size(), {}};
    stats.caption_ids.reserve(hits.size());
    for (std::size_t c : hits) stats.caption_ids.push_back(corpus[c].id);
    out.push_back(std::move(stats));
  }
  std::sort(out.begin(), out.end(), [](const PhraseStats& a, const PhraseStats& b) {
    return a.frequency != b.frequency ? a.frequency < b.frequency : a.phrase < b.phrase;
  });
  return out;
}

std::vector<std::string> select_alignment_captions(std::span<const PhraseStats> candidates, std::int64_t cap,
                                                   std::uint64_t seed, std::vector<std::size_t>* contributed) {
  if (cap <= 0) throw std::invalid_argument("caption cap must be positive");
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    if (candidates[k].frequency < candidates[k - 1].frequency) {
      throw std::invalid_argument("candidates must be sorted by ascending frequency");
    }
  }
  const auto limit = static_cast<std::size_t>(cap);
  Rng rng(seed);
  std::unordered_set<std::string> selected;
  std::vector<std::string> out;
  if (contributed) contributed->clear();

  for (const PhraseStats& stats : candidates) {
    std::vector<const std::string*> unseen;
    for (const auto& id : stats.caption_ids) {
      if (!selected.contains(id)) unseen.push_back(&id);
    }
    if (unseen.size() > limit) {
      // Partial Fisher-Yates over positions, then restore corpus order.
      std::vector<std::size_t> positions(unseen.size());
      for (std::size_t k = 0; k < positions.size(); ++k) positions[k] = k;
      for (std::size_t k = 0; k < limit; ++k) {
        const auto j = k + static_cast<std::size_t>(uniform_index(rng, positions.size() - k));
        std::swap(positions[k], positions[j]);
      }
      positions.resize(limit);
      std::sort(positions.begin(), positions.end());
      std::vector<const std::string*> sample;
      sample.reserve(limit);
      for (std::size_t p : positions) sample.push_back(unseen[p]);
      unseen = std::move(sample);
    }
    for (const std::string* id : unseen) {
      if (selected.insert(*id).second) out.push_back(*id);
    }
    if (contributed) contributed->push_back(unseen.size());
  }
  return out;
}

// ---------------------------------------------------------------------------

void AlignmentRecord::validate() const {
  if (id.empty()) throw std::invalid_argument("alignment record id is empty");
  validate_turns(conversations);
}

void InstructRecord::validate() const {
  if (id.empty()) throw std::invalid_argument("instruct record id is empty");
  validate_turns(conversations);
}

const std::vector<std::string>& default_alignment_questions() {
  static const std::vector<std::string> questions = {
      "Describe the following video concisely.",
      "Give a brief description of the video.",
      "What is happening in this video?",
      "Summarize the visual content of the video.",
      "Provide a short caption for this video.",
      "Briefly describe what you see in the video.",
      "Write a terse but informative summary of the clip.",
      "What does this video show?",
  };
  return questions;
}

const std::vector<std::string>& default_detail_questions() {
  static const std::vector<std::string> questions = {
      "Describe the following video in detail.",
      "Provide a detailed description of the video.",
      "What happens in this video? Explain in detail.",
      "Give an elaborate account of the events in the video.",
  };
  return questions;
}

AlignmentRecord make_alignment_record(const CaptionEntry& entry, std::span<const std::string> question_bank,
                                      std::uint64_t seed) {
  if (question_bank.empty()) throw std::invalid_argument("question bank is empty");
  if (trim(entry.caption).empty()) throw std::invalid_argument("caption is empty");
  Rng rng(seed);
  const std::string& question = question_bank[uniform_index(rng, question_bank.size())];
  AlignmentRecord record{entry.id, entry.video_path, {}};
  record.conversations.push_back({"human", question + "\n" + std::string(kVideoMarker)});
  record.conversations.push_back({"gpt", entry.caption});
  return record;
}

ordered_json to_json(const AlignmentRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["video"] = record.video;
  j["conversations"] = turns_to_json(record.conversations);
  return j;
}

ordered_json to_json(const InstructRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["v_id"] = record.v_id;
  j["video"] = record.video;
  j["source"] = record.source;
  j["conversations"] = turns_to_json(record.conversations);
  return j;
}

AlignmentRecord alignment_record_from_json(const json& j) {
  AlignmentRecord r{id_from_json(j.at("id")), j.at("video").get<std::string>(), turns_from_json(j.at("conversations"))};
  r.validate();
  return r;
}

InstructRecord instruct_record_from_json(const json& j) {
  InstructRecord r{id_from_json(j.at("id")), id_from_json(j.at("v_id")), j.at("video").get<std::string>(),
                   j.at("source").get<std::string>(), turns_from_json(j.at("conversations"))};
  r.validate();
  return r;
}

CaptionEntry caption_entry_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("corpus row must be a JSON object");
  CaptionEntry e{id_from_json(j.at("id")), j.at("video").get<std::string>(), j.at("caption").get<std::string>()};
  if (trim(e.caption).empty()) throw std::invalid_argument("caption is empty for id " + e.id);
  return e;
}

// ---------------------------------------------------------------------------

InstructKind parse_instruct_kind(std::string_view name) {
  if (name == "detail_description") return InstructKind::detail_description;
  if (name == "conversation") return InstructKind::conversation;
  if (name == "complex_reasoning") return InstructKind::complex_reasoning;
  throw std::invalid_argument("unknown instruction kind: " + std::string(name));
}

std::string_view to_string(InstructKind kind) {
  switch (kind) {
    case InstructKind::detail_description: return "detail_description";
    case InstructKind::conversation: return "conversation";
    case InstructKind::complex_reasoning: return "complex_reasoning";
  }
  throw std::invalid_argument("unknown instruction kind");
}

std::string instruct_user_payload(std::string_view title, std::string_view caption) {
  return "[title] " + std::string(title) + " [Caption] " + std::string(caption);
}

InstructRequest make_instruct_request(InstructKind kind, std::string_view title, std::string_view caption) {
  if (trim(title).empty()) throw std::invalid_argument("title is empty");
  if (trim(caption).empty()) throw std::invalid_argument("caption is empty");
  return {kind, std::string(instruct_system_template(kind)), instruct_exemplars(kind),
          instruct_user_payload(title, caption)};
}

std::vector<ChatMessage> to_messages(const InstructRequest& request) {
  std::vector<ChatMessage> out{{"system", request.system}};
  for (const auto& ex : request.exemplars) {
    out.push_back({"user", ex.user});
    out.push_back({"assistant", ex.assistant});
  }
  out.push_back({"user", request.user_payload});
  return out;
}

InstructResponse parse_instruct_response(InstructKind kind, std::string_view raw) {
  if (trim(raw).empty()) throw std::invalid_argument("response is empty");
  InstructResponse out;
  switch (kind) {
    case InstructKind::detail_description:
      out.description = std::string(trim(raw));
      return out;
    case InstructKind::complex_reasoning: {
      auto pair = qa_from_mapping(raw);
      if (!pair) throw ParseError("response holds no question/answer mapping");
      out.pairs.push_back(std::move(*pair));
      return out;
    }
    case InstructKind::conversation: {
      std::size_t line_no = 0;
      std::size_t start = 0;
      while (start <= raw.size()) {
        const std::size_t end = std::min(raw.find('\n', start), raw.size());
        std::string_view line = trim(raw.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (!line.empty() && line.back() == ',') line = trim(line.substr(0, line.size() - 1));
        if (line.empty()) continue;
        if (auto pair = qa_from_mapping(line)) {
          out.pairs.push_back(std::move(*pair));
        } else {
          out.malformed_lines.push_back(line_no);
        }
      }
      if (out.pairs.empty()) {
        std::string lines;
        for (std::size_t n : out.malformed_lines) lines += (lines.empty() ? "" : ", ") + std::to_string(n);
        throw ParseError("no question/answer line parsed (malformed lines: " + lines + ")", out.malformed_lines);
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown instruction kind");
}

InstructRecord make_instruct_record(const InstructSource& meta, InstructKind kind, const InstructResponse& response,
                                    std::span<const std::string> question_bank, std::uint64_t seed) {
  InstructRecord record{meta.id, meta.v_id, meta.video, meta.source, {}};
  const std::string prefix = std::string(kVideoMarker) + "\n";
  if (kind == InstructKind::detail_description) {
    if (question_bank.empty()) throw std::invalid_argument("question bank is empty");
    if (response.description.empty()) throw std::invalid_argument("response has no description");
    Rng rng(seed);
    record.conversations.push_back({"human", prefix + question_bank[uniform_index(rng, question_bank.size())]});
    record.conversations.push_back({"gpt", response.description});
  } else {
    if (response.pairs.empty()) throw std::invalid_argument("response has no question/answer pairs");
    for (std::size_t k = 0; k < response.pairs.size(); ++k) {
      record.conversations.push_back({"human", (k == 0 ? prefix : "") + response.pairs[k].question});
      record.conversations.push_back({"gpt", response.pairs[k].answer});
    }
  }
  record.validate();
  return record;
}

std::string format_transcript(std::span<const ChatMessage> messages) {
  std::string out;
  for (const auto& m : messages) {
    out += "[" + m.role + "]\n";
    out += m.content;
    out += "\n";
  }
  return out;
}

}  // namespace vidlm
