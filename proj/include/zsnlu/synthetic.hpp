#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsnlu/corpus.hpp"
#include "zsnlu/encoder.hpp"

namespace zsnlu {

struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t train_size = 600;
  std::size_t test_size = 150;
  std::size_t dim_enc = 32;
  // Spread of slot-value vectors around their slot-description centre.
  double value_noise = 0.5;
};

// Five intents over twelve slots, templated utterances, and toy embeddings
// whose slot-value tokens sit near their slot descriptions.
struct SyntheticCorpus {
  Ontology ontology;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  EmbeddingStore store{1};
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// Writes ontology.json, train.jsonl, test.jsonl and embeddings.zsemb.
void write_synthetic(const SyntheticCorpus& corpus, const std::string& dir);

// Every string the model looks up for these datasets, sorted and unique.
std::vector<std::string> manifest_texts(const Ontology& ontology,
                                        std::span<const std::vector<Utterance>> datasets);

}  // namespace zsnlu
