#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace zsnlu {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-token class indices shared by the slot head, the losses and decoding.
enum BioClass : int { kBegin = 0, kInside = 1, kOutside = 2 };
inline constexpr int kNumBioClasses = 3;

struct BioTag {
  BioClass kind = kOutside;
  std::string slot;  // empty for O

  static BioTag parse(std::string_view tag);
  std::string str() const;
};

// Inclusive token range [start, end].
struct Span {
  std::string slot;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class BioMode {
  kStrict,  // an I- that does not continue a same-slot span is an error
  kRepair,  // such an I- opens a new span, as conlleval does
};

std::vector<Span> bio_to_spans(std::span<const std::string> tags, BioMode mode = BioMode::kStrict);
std::vector<std::string> spans_to_bio(std::span<const Span> spans, std::size_t length);

// "GetWeather" -> "get weather", "condition_temperature" -> "condition temperature".
std::string label_to_description(std::string_view label);

std::vector<std::string> split_whitespace(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

struct IntentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> slots;  // lexicographic, fixes the gamma index space
};

struct SlotInfo {
  std::string name;
  std::string description;
  std::vector<std::string> examples;
};

class Ontology {
 public:
  static Ontology from_json(const nlohmann::json& doc);
  static Ontology load(const std::string& path);
  nlohmann::json to_json() const;

  const std::map<std::string, IntentInfo, std::less<>>& intents() const { return intents_; }
  const std::map<std::string, SlotInfo, std::less<>>& slots() const { return slots_; }
  const IntentInfo& intent(std::string_view name) const;
  const SlotInfo& slot(std::string_view name) const;
  bool has_intent(std::string_view name) const { return intents_.find(name) != intents_.end(); }
  bool has_slot(std::string_view name) const { return slots_.find(name) != slots_.end(); }
  bool intent_has_slot(std::string_view intent, std::string_view slot) const;

  std::vector<std::string> intent_names() const;
  std::vector<std::string> slot_names() const;
  std::vector<std::string> intents_with_slot(std::string_view slot) const;
  std::size_t max_slots_per_intent() const;
  // The ontology seen while training without `intent`: the intent and any
  // slot only it used are removed.
  Ontology without_intent(std::string_view intent) const;

  // Every text the model may look up: descriptions and exemplar values.
  std::vector<std::string> required_texts() const;

 private:
  std::map<std::string, IntentInfo, std::less<>> intents_;
  std::map<std::string, SlotInfo, std::less<>> slots_;
};

struct Utterance {
  std::string text;
  std::vector<std::string> tokens;
  std::string intent;
  std::vector<std::string> bio;

  // Slot types occurring in the gold annotation, sorted and unique.
  std::vector<std::string> present_slots() const;
};

// Checks the Utterance invariants against the ontology; throws CorpusError.
void validate_utterance(const Utterance& u, const Ontology& ontology);
Utterance parse_utterance(const nlohmann::json& line, const Ontology& ontology);
nlohmann::json utterance_to_json(const Utterance& u);

std::vector<Utterance> load_dataset(const std::string& path, const Ontology& ontology);
void save_dataset(const std::string& path, std::span<const Utterance> data);

struct LoioSplit {
  std::vector<Utterance> train;
  std::vector<Utterance> test;
};

// Removes the target intent from the training pool; the test pool is kept
// whole so that it still contains the target.
LoioSplit split_leave_one_intent_out(std::span<const Utterance> train_pool,
                                     std::span<const Utterance> test_pool,
                                     std::string_view target);

// Seeded holdout of round(fraction * n) utterances (at least one when n > 1).
std::pair<std::vector<Utterance>, std::vector<Utterance>> holdout_validation(
    std::span<const Utterance> data, double fraction, std::uint64_t seed);

struct TrainingPair {
  const Utterance* utterance = nullptr;
  std::string intent;
  std::string slot;
  bool intent_present = false;
  std::vector<int> bio_targets;  // BioClass per token, for the paired slot only
  int quadrant = 0;              // 1..4
};

// BIO class targets of one slot inside a gold tag sequence.
std::vector<int> slot_targets(const Utterance& u, std::string_view slot);

// One pair per available quadrant:
//   1 intent present, slot present   2 intent present, slot absent
//   3 intent absent,  slot present   4 intent absent,  slot absent
// Absent slots are drawn from the paired intent's own slots when possible.
std::vector<TrainingPair> sample_quadrants(const Utterance& u, const Ontology& ontology,
                                           std::mt19937_64& rng);

}  // namespace zsnlu
