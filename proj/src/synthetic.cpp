#include "zsnlu/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

namespace zsnlu {

namespace {

struct IntentSpec {
  const char* name;
  std::vector<const char*> slots;
  std::vector<const char*> templates;  // {slot} placeholders, one token each
};

const std::vector<IntentSpec>& intent_specs() {
  static const std::vector<IntentSpec> specs = {
      {"GetWeather",
       {"city", "condition_description", "time_range"},
       {"what is the weather in {city} {time_range}", "get the weather forecast for {city}",
        "will it be {condition_description} in {city} {time_range}", "get weather for {city}",
        "is the weather going to be {condition_description} {time_range}",
        "tell me the weather {time_range} in {city}"}},
      {"BookRestaurant",
       {"city", "cuisine", "party_size", "time_range"},
       {"book a {cuisine} restaurant in {city}", "book a table for {party_size} {time_range}",
        "reserve a restaurant for {party_size} in {city} {time_range}",
        "book a {cuisine} restaurant for {party_size}", "find a restaurant serving {cuisine} food {time_range}"}},
      {"PlayMusic",
       {"artist", "genre", "service"},
       {"play some {genre} music", "play {artist} on {service}", "play music by {artist}",
        "play {genre} music on {service}", "i want to hear {artist} music"}},
      {"RateBook",
       {"book_name", "rating_value"},
       {"rate the book {book_name} {rating_value} stars", "give {book_name} a rating of {rating_value}",
        "rate this book {rating_value} points", "i rate {book_name} {rating_value}"}},
      {"SearchScreeningEvent",
       {"cinema", "movie_name", "time_range"},
       {"search the screening times for {movie_name}", "find a screening event at {cinema} {time_range}",
        "when is {movie_name} playing at {cinema}", "search for movie screenings {time_range}"}},
  };
  return specs;
}

// The first two values of each slot double as its exemplars.
const std::map<std::string, std::vector<std::string>>& slot_values() {
  static const std::map<std::string, std::vector<std::string>> values = {
      {"city", {"paris", "new york", "london", "tokyo", "berlin", "madrid", "rome", "san diego"}},
      {"condition_description", {"sunny", "rainy", "cloudy", "snowy", "windy", "foggy", "stormy", "humid"}},
      {"time_range", {"tonight", "tomorrow", "next weekend", "today", "noon", "midnight", "friday evening",
                      "next monday"}},
      {"cuisine", {"italian", "korean barbecue", "mexican", "sushi", "thai", "indian", "french", "vegan"}},
      {"party_size", {"two", "four", "three", "five", "six", "eight", "ten", "twelve"}},
      {"artist", {"adele", "taylor swift", "drake", "beyonce", "miles davis", "shakira", "eminem",
                  "bob marley"}},
      {"genre", {"jazz", "hip hop", "rock", "blues", "reggae", "classical", "pop", "metal"}},
      {"service", {"spotify", "amazon prime", "pandora", "deezer", "youtube", "tidal", "napster",
                   "soundcloud"}},
      {"book_name", {"dune", "moby dick", "emma", "ulysses", "beloved", "animal farm", "jane eyre",
                     "rebecca"}},
      {"rating_value", {"4", "10", "0", "1", "2", "3", "5", "6"}},
      {"cinema", {"amc", "imax theater", "regal", "cinemark", "odeon", "landmark cinema", "vue",
                  "showcase"}},
      {"movie_name", {"inception", "star wars", "avatar", "toy story", "jurassic park", "titanic", "alien",
                      "blade runner"}},
  };
  return values;
}

Ontology build_ontology() {
  nlohmann::json doc;
  for (const auto& [slot, values] : slot_values()) {
    doc["slots"][slot] = {{"examples", {values[0], values[1]}}};
  }
  for (const auto& spec : intent_specs()) {
    doc["intents"][spec.name] = {{"slots", spec.slots}};
  }
  return Ontology::from_json(doc);
}

Utterance instantiate(const IntentSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_template(0, spec.templates.size() - 1);
  Utterance u;
  u.intent = spec.name;
  for (const auto& word : split_whitespace(spec.templates[pick_template(rng)])) {
    if (word.size() > 2 && word.front() == '{' && word.back() == '}') {
      const std::string slot = word.substr(1, word.size() - 2);
      const auto& values = slot_values().at(slot);
      std::uniform_int_distribution<std::size_t> pick_value(0, values.size() - 1);
      const auto tokens = split_whitespace(values[pick_value(rng)]);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        u.tokens.push_back(tokens[i]);
        u.bio.push_back((i == 0 ? "B-" : "I-") + slot);
      }
    } else {
      u.tokens.push_back(word);
      u.bio.push_back("O");
    }
  }
  u.text = join_tokens(u.tokens);
  return u;
}

std::vector<Utterance> sample_split(std::size_t count, std::mt19937_64& rng) {
  const auto& specs = intent_specs();
  std::vector<std::size_t> intents(count);
  for (std::size_t i = 0; i < count; ++i) intents[i] = i % specs.size();
  std::shuffle(intents.begin(), intents.end(), rng);
  std::vector<Utterance> out;
  for (std::size_t idx : intents) out.push_back(instantiate(specs[idx], rng));
  return out;
}

}  // namespace

std::vector<std::string> manifest_texts(const Ontology& ontology,
                                        std::span<const std::vector<Utterance>> datasets) {
  std::set<std::string> texts;
  for (auto& t : ontology.required_texts()) texts.insert(std::move(t));
  for (const auto& data : datasets) {
    for (const auto& u : data) texts.insert(u.text);
  }
  return {texts.begin(), texts.end()};
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  if (config.dim_enc < 2) throw std::invalid_argument("embedding dimension must be at least 2");
  SyntheticCorpus corpus;
  corpus.ontology = build_ontology();

  std::mt19937_64 rng(config.seed);
  corpus.train = sample_split(config.train_size, rng);
  corpus.test = sample_split(config.test_size, rng);

  // Value tokens: description centre plus a random perpendicular-ish offset.
  ToyEncoder encoder(config.dim_enc, config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const auto& [slot, values] : slot_values()) {
    const EmbeddingRecord desc = encoder.encode(corpus.ontology.slot(slot).description);
    std::vector<double> centre(config.dim_enc, 0.0);
    for (std::size_t r = 0; r < desc.token_vecs.rows(); ++r) {
      for (std::size_t c = 0; c < config.dim_enc; ++c) centre[c] += desc.token_vecs(r, c);
    }
    normalize(centre);
    for (const auto& value : values) {
      for (const auto& token : split_whitespace(value)) {
        std::vector<double> offset(config.dim_enc, 0.0);
        // The last coordinate is reserved for the sentence-level offset.
        for (std::size_t c = 0; c + 1 < config.dim_enc; ++c) offset[c] = gauss(rng);
        normalize(offset);
        std::vector<double> v(config.dim_enc);
        for (std::size_t c = 0; c < config.dim_enc; ++c) v[c] = centre[c] + config.value_noise * offset[c];
        encoder.set_token_vector(token, std::move(v));
      }
    }
  }

  const std::vector<Utterance> splits[] = {corpus.train, corpus.test};
  corpus.store = EmbeddingStore(config.dim_enc);
  for (const auto& text : manifest_texts(corpus.ontology, splits)) corpus.store.insert(encoder.encode(text));
  return corpus;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  {
    std::ofstream out(root / "ontology.json", std::ios::trunc);
    out << corpus.ontology.to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (root / "ontology.json").string());
  }
  save_dataset((root / "train.jsonl").string(), corpus.train);
  save_dataset((root / "test.jsonl").string(), corpus.test);
  corpus.store.save((root / "embeddings.zsemb").string());
}

}  // namespace zsnlu
