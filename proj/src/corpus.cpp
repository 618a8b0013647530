#include "zsnlu/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace zsnlu {

BioTag BioTag::parse(std::string_view tag) {
  if (tag == "O") return BioTag{};
  if (tag.size() > 2 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) {
    return BioTag{tag[0] == 'B' ? kBegin : kInside, std::string(tag.substr(2))};
  }
  throw CorpusError("malformed BIO tag '" + std::string(tag) + "'");
}

std::string BioTag::str() const {
  if (kind == kOutside) return "O";
  return std::string(kind == kBegin ? "B-" : "I-") + slot;
}

std::vector<Span> bio_to_spans(std::span<const std::string> tags, BioMode mode) {
  std::vector<Span> spans;
  std::optional<Span> open;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag tag = BioTag::parse(tags[i]);
    if (tag.kind == kInside && open && open->slot == tag.slot) {
      open->end = i;
      continue;
    }
    if (open) {
      spans.push_back(*open);
      open.reset();
    }
    if (tag.kind == kOutside) continue;
    if (tag.kind == kInside && mode == BioMode::kStrict) {
      throw CorpusError("I-" + tag.slot + " at position " + std::to_string(i) +
                        " does not continue a " + tag.slot + " span");
    }
    open = Span{tag.slot, i, i};
  }
  if (open) spans.push_back(*open);
  return spans;
}

std::vector<std::string> spans_to_bio(std::span<const Span> spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const Span& s : spans) {
    if (s.end >= length || s.start > s.end) throw CorpusError("span out of range");
    tags[s.start] = "B-" + s.slot;
    for (std::size_t i = s.start + 1; i <= s.end; ++i) tags[i] = "I-" + s.slot;
  }
  return tags;
}

std::string label_to_description(std::string_view label) {
  if (label.empty()) throw CorpusError("cannot describe an empty label");
  std::string spaced;
  const auto is_upper = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
  const auto is_lower = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
  const auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = 0; i < label.size(); ++i) {
    const char c = label[i];
    if (c == '_' || c == '-') {
      spaced += ' ';
      continue;
    }
    if (i > 0 && is_upper(c)) {
      const char prev = label[i - 1];
      const bool next_lower = i + 1 < label.size() && is_lower(label[i + 1]);
      // fooBar, foo2Bar and the "P" of "HTMLParser"
      if (is_lower(prev) || is_digit(prev) || (is_upper(prev) && next_lower)) spaced += ' ';
    }
    spaced += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  const std::string out = join_tokens(split_whitespace(spaced));
  if (out.empty()) throw CorpusError("label '" + std::string(label) + "' has no description text");
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

Ontology Ontology::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("intents") || !doc.contains("slots")) {
    throw CorpusError("ontology must be an object with \"intents\" and \"slots\"");
  }
  Ontology o;
  for (const auto& [name, body] : doc.at("slots").items()) {
    SlotInfo info;
    info.name = name;
    info.description = body.contains("description") ? body.at("description").get<std::string>()
                                                    : label_to_description(name);
    if (body.contains("examples")) info.examples = body.at("examples").get<std::vector<std::string>>();
    if (info.description.empty()) throw CorpusError("slot " + name + " has an empty description");
    for (const auto& e : info.examples) {
      if (split_whitespace(e).empty()) throw CorpusError("slot " + name + " has an empty exemplar");
    }
    o.slots_.emplace(name, std::move(info));
  }
  for (const auto& [name, body] : doc.at("intents").items()) {
    IntentInfo info;
    info.name = name;
    info.description = body.contains("description") ? body.at("description").get<std::string>()
                                                    : label_to_description(name);
    if (info.description.empty()) throw CorpusError("intent " + name + " has an empty description");
    if (body.contains("slots")) info.slots = body.at("slots").get<std::vector<std::string>>();
    std::sort(info.slots.begin(), info.slots.end());
    if (std::adjacent_find(info.slots.begin(), info.slots.end()) != info.slots.end()) {
      throw CorpusError("intent " + name + " lists a slot twice");
    }
    for (const auto& s : info.slots) {
      if (!o.slots_.contains(s)) throw CorpusError("intent " + name + " references unknown slot " + s);
    }
    o.intents_.emplace(name, std::move(info));
  }
  if (o.intents_.empty()) throw CorpusError("ontology has no intents");
  return o;
}

Ontology Ontology::without_intent(std::string_view intent) const {
  if (!has_intent(intent)) throw CorpusError("unknown intent " + std::string(intent));
  if (intents_.size() < 2) throw CorpusError("cannot remove the only intent");
  Ontology o;
  for (const auto& [name, info] : intents_) {
    if (name == intent) continue;
    o.intents_.emplace(name, info);
    for (const auto& s : info.slots) o.slots_.emplace(s, slots_.at(s));
  }
  return o;
}

Ontology Ontology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open ontology " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError("malformed ontology " + path + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Ontology::to_json() const {
  nlohmann::json doc;
  doc["intents"] = nlohmann::json::object();
  doc["slots"] = nlohmann::json::object();
  for (const auto& [name, info] : intents_) {
    doc["intents"][name] = {{"description", info.description}, {"slots", info.slots}};
  }
  for (const auto& [name, info] : slots_) {
    doc["slots"][name] = {{"description", info.description}, {"examples", info.examples}};
  }
  return doc;
}

const IntentInfo& Ontology::intent(std::string_view name) const {
  auto it = intents_.find(std::string(name));
  if (it == intents_.end()) throw CorpusError("unknown intent " + std::string(name));
  return it->second;
}

const SlotInfo& Ontology::slot(std::string_view name) const {
  auto it = slots_.find(std::string(name));
  if (it == slots_.end()) throw CorpusError("unknown slot " + std::string(name));
  return it->second;
}

bool Ontology::intent_has_slot(std::string_view intent_name, std::string_view slot_name) const {
  const auto& slots = intent(intent_name).slots;
  return std::binary_search(slots.begin(), slots.end(), slot_name);
}

std::vector<std::string> Ontology::intent_names() const {
  std::vector<std::string> out;
  for (const auto& [name, info] : intents_) out.push_back(name);
  return out;
}

std::vector<std::string> Ontology::slot_names() const {
  std::vector<std::string> out;
  for (const auto& [name, info] : slots_) out.push_back(name);
  return out;
}

std::vector<std::string> Ontology::intents_with_slot(std::string_view slot_name) const {
  std::vector<std::string> out;
  for (const auto& [name, info] : intents_) {
    if (std::binary_search(info.slots.begin(), info.slots.end(), slot_name)) out.push_back(name);
  }
  return out;
}

std::size_t Ontology::max_slots_per_intent() const {
  std::size_t best = 0;
  for (const auto& [name, info] : intents_) best = std::max(best, info.slots.size());
  return best;
}

std::vector<std::string> Ontology::required_texts() const {
  std::set<std::string> texts;
  for (const auto& [name, info] : intents_) texts.insert(info.description);
  for (const auto& [name, info] : slots_) {
    texts.insert(info.description);
    texts.insert(info.examples.begin(), info.examples.end());
  }
  return {texts.begin(), texts.end()};
}

// ---------------------------------------------------------------------------

std::vector<std::string> Utterance::present_slots() const {
  std::set<std::string> found;
  for (const auto& tag : bio) {
    BioTag t = BioTag::parse(tag);
    if (t.kind != kOutside) found.insert(std::move(t.slot));
  }
  return {found.begin(), found.end()};
}

void validate_utterance(const Utterance& u, const Ontology& ontology) {
  if (u.tokens.empty()) throw CorpusError("utterance has no tokens");
  if (u.bio.size() != u.tokens.size()) {
    throw CorpusError("bio has " + std::to_string(u.bio.size()) + " tags for " +
                      std::to_string(u.tokens.size()) + " tokens");
  }
  if (!ontology.has_intent(u.intent)) throw CorpusError("unknown intent " + u.intent);
  bio_to_spans(u.bio, BioMode::kStrict);
  for (const auto& slot : u.present_slots()) {
    if (!ontology.has_slot(slot)) throw CorpusError("unknown slot " + slot);
    if (!ontology.intent_has_slot(u.intent, slot)) {
      throw CorpusError("slot " + slot + " does not belong to intent " + u.intent);
    }
  }
}

Utterance parse_utterance(const nlohmann::json& line, const Ontology& ontology) {
  Utterance u;
  try {
    u.tokens = line.at("tokens").get<std::vector<std::string>>();
    u.intent = line.at("intent").get<std::string>();
    u.bio = line.at("bio").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(std::string("bad utterance record: ") + e.what());
  }
  u.text = join_tokens(u.tokens);
  validate_utterance(u, ontology);
  return u;
}

nlohmann::json utterance_to_json(const Utterance& u) {
  return {{"tokens", u.tokens}, {"intent", u.intent}, {"bio", u.bio}};
}

std::vector<Utterance> load_dataset(const std::string& path, const Ontology& ontology) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open dataset " + path);
  std::vector<Utterance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_whitespace(line).empty()) continue;
    try {
      out.push_back(parse_utterance(nlohmann::json::parse(line), ontology));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const CorpusError& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::string& path, std::span<const Utterance> data) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write dataset " + path);
  for (const auto& u : data) out << utterance_to_json(u).dump() << '\n';
}

LoioSplit split_leave_one_intent_out(std::span<const Utterance> train_pool,
                                     std::span<const Utterance> test_pool,
                                     std::string_view target) {
  const auto mentions = [&](const Utterance& u) { return u.intent == target; };
  if (std::none_of(train_pool.begin(), train_pool.end(), mentions) &&
      std::none_of(test_pool.begin(), test_pool.end(), mentions)) {
    throw CorpusError("target intent " + std::string(target) + " does not occur in the data");
  }
  LoioSplit split;
  for (const auto& u : train_pool) {
    if (!mentions(u)) split.train.push_back(u);
  }
  if (split.train.empty()) {
    throw CorpusError("holding out " + std::string(target) + " leaves no training data");
  }
  split.test.assign(test_pool.begin(), test_pool.end());
  return split;
}

std::pair<std::vector<Utterance>, std::vector<Utterance>> holdout_validation(
    std::span<const Utterance> data, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));
  if (held == 0 && data.size() > 1 && fraction > 0.0) held = 1;
  held = std::min(held, data.size() > 0 ? data.size() - 1 : 0);
  std::vector<bool> is_val(data.size(), false);
  for (std::size_t i = 0; i < held; ++i) is_val[order[i]] = true;
  std::pair<std::vector<Utterance>, std::vector<Utterance>> out;
  for (std::size_t i = 0; i < data.size(); ++i) (is_val[i] ? out.second : out.first).push_back(data[i]);
  return out;
}

std::vector<int> slot_targets(const Utterance& u, std::string_view slot) {
  std::vector<int> targets(u.tokens.size(), kOutside);
  for (std::size_t i = 0; i < u.bio.size(); ++i) {
    const BioTag tag = BioTag::parse(u.bio[i]);
    if (tag.kind != kOutside && tag.slot == slot) targets[i] = tag.kind;
  }
  return targets;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

std::vector<std::string> minus(const std::vector<std::string>& all, const std::vector<std::string>& drop) {
  std::vector<std::string> out;
  std::set_difference(all.begin(), all.end(), drop.begin(), drop.end(), std::back_inserter(out));
  return out;
}

}  // namespace

std::vector<TrainingPair> sample_quadrants(const Utterance& u, const Ontology& ontology,
                                           std::mt19937_64& rng) {
  const std::vector<std::string> present = u.present_slots();
  std::vector<std::string> others;
  for (const auto& name : ontology.intent_names()) {
    if (name != u.intent) others.push_back(name);
  }

  auto make = [&](int quadrant, std::string intent, std::string slot, bool intent_present,
                  bool slot_present) {
    TrainingPair p;
    p.utterance = &u;
    p.intent = std::move(intent);
    p.intent_present = intent_present;
    p.bio_targets = slot_present ? slot_targets(u, slot) : std::vector<int>(u.tokens.size(), kOutside);
    p.slot = std::move(slot);
    p.quadrant = quadrant;
    return p;
  };

  // Absent slot for a paired intent: its own slots first, any slot otherwise.
  auto absent_slot_for = [&](const std::string& intent) -> std::optional<std::string> {
    auto candidates = minus(ontology.intent(intent).slots, present);
    if (candidates.empty()) candidates = minus(ontology.slot_names(), present);
    if (candidates.empty()) return std::nullopt;
    return pick(candidates, rng);
  };

  std::vector<TrainingPair> pairs;
  if (!present.empty()) {
    pairs.push_back(make(1, u.intent, pick(present, rng), true, true));
  }
  if (auto slot = absent_slot_for(u.intent)) {
    pairs.push_back(make(2, u.intent, *slot, true, false));
  }
  if (!present.empty() && !others.empty()) {
    const std::string slot = pick(present, rng);
    std::vector<std::string> hosts;
    for (const auto& name : ontology.intents_with_slot(slot)) {
      if (name != u.intent) hosts.push_back(name);
    }
    const std::string intent = pick(hosts.empty() ? others : hosts, rng);
    pairs.push_back(make(3, intent, slot, false, true));
  }
  if (!others.empty()) {
    const std::string intent = pick(others, rng);
    if (auto slot = absent_slot_for(intent)) pairs.push_back(make(4, intent, *slot, false, false));
  }
  return pairs;
}

}  // namespace zsnlu
