#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zsnlu/corpus.hpp"
#include "zsnlu/tensor.hpp"

namespace zsnlu {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultEpsilon = 1e-7;

// Column alphabet of the beam matrix: B-s, I-s for every slot in canonical
// order, then O.
class LabelSpace {
 public:
  explicit LabelSpace(std::vector<std::string> slots);

  std::size_t size() const { return 2 * slots_.size() + 1; }
  std::size_t slot_count() const { return slots_.size(); }
  std::size_t outside() const { return 2 * slots_.size(); }
  std::size_t begin_of(std::size_t slot) const { return 2 * slot; }
  std::size_t inside_of(std::size_t slot) const { return 2 * slot + 1; }
  bool is_begin(std::size_t col) const { return col < outside() && col % 2 == 0; }
  bool is_inside(std::size_t col) const { return col < outside() && col % 2 == 1; }
  std::size_t slot_of(std::size_t col) const { return col / 2; }

  const std::vector<std::string>& slots() const { return slots_; }
  std::optional<std::size_t> slot_index(std::string_view slot) const;
  std::string label(std::size_t col) const;
  std::size_t column(std::string_view label) const;

 private:
  std::vector<std::string> slots_;
};

// Per-intent admissibility of each column, precomputed for the inner loops.
class LegalityTable {
 public:
  LegalityTable(const LabelSpace& labels, const Ontology& ontology, std::string_view intent);
  // Start-of-sentence behaves like a preceding O.
  bool allows(std::optional<std::size_t> prev, std::size_t next) const;

 private:
  const LabelSpace* labels_;
  std::vector<bool> slot_allowed_;
};

bool is_legal_transition(const LabelSpace& labels, std::optional<std::size_t> prev, std::size_t next,
                         std::string_view intent, const Ontology& ontology);

// Model outputs for one utterance: P(B), P(I), P(O) per token for every
// (intent, slot-of-intent) run, and z_a per intent.
struct UtteranceScores {
  std::size_t length = 0;
  std::map<std::pair<std::string, std::string>, Tensor> slot_probs;
  std::map<std::string, double> intent_probs;
};

// T x 3 tables per slot, averaged over every intent that carries the slot.
std::map<std::string, Tensor> average_slot_probs(const UtteranceScores& scores, const Ontology& ontology);

struct BeamMatrix {
  LabelSpace labels;
  Tensor probs;  // T x (2S + 1)
  double epsilon = kDefaultEpsilon;
};

// Slot columns are the averaged B/I probabilities floored at epsilon; the O
// column is max(epsilon, 1 - sum of the slot columns), summed left to right.
BeamMatrix build_beam_matrix(const UtteranceScores& scores, const Ontology& ontology,
                             double epsilon = kDefaultEpsilon);

struct BeamOptions {
  std::size_t width = 3;        // V
  std::size_t top_intents = 3;  // initial hypotheses
  bool per_intent = true;       // V paths per intent rather than V overall
};

struct DecodedPath {
  std::string intent;
  std::vector<std::size_t> columns;
  double score = 0.0;  // log z_a + sum_i log p(label_i | w_i)
};

// Total order used for ranking complete paths: higher score, then intent
// name, then lower column indices.
bool path_better(const DecodedPath& a, const DecodedPath& b);

DecodedPath beam_search(const BeamMatrix& matrix, const std::map<std::string, double>& intent_probs,
                        const Ontology& ontology, const BeamOptions& options = {});

std::vector<std::string> columns_to_bio(const LabelSpace& labels, std::span<const std::size_t> columns);

// Resolves per-slot argmax taggings into one sequence: spans from every slot
// compete, the one with the higher B-token probability wins any overlap.
std::vector<std::string> aggregate_independent(const std::map<std::string, Tensor>& per_slot_probs,
                                               std::size_t length);

}  // namespace zsnlu
