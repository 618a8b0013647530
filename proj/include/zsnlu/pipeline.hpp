#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsnlu/decoder.hpp"
#include "zsnlu/eval.hpp"
#include "zsnlu/model.hpp"

namespace zsnlu {

enum class DecodeMode {
  kIndependent,  // argmax intent, per-slot taggings of that intent merged
  kBeam,         // legality-constrained beam search over the beam matrix
  kSlotOnly,     // no intent: per-slot averages over all intents merged
};

std::string_view decode_mode_name(DecodeMode m);

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kIndependent;
  BeamOptions beam;
  double epsilon = kDefaultEpsilon;
};

struct Prediction {
  std::vector<std::string> tokens;
  std::string intent;
  std::vector<std::string> bio;
  double score = 0.0;
};

// Runs the model on every (intent, slot-of-intent) pair for one utterance.
UtteranceScores score_utterance(const JointModel& model, const EmbeddingStore& store,
                                const Ontology& ontology, const Utterance& utterance);

Prediction decode_scores(const UtteranceScores& scores, const Ontology& ontology,
                         const DecodeOptions& options, std::vector<std::string> tokens);

std::vector<Prediction> predict_dataset(const JointModel& model, const EmbeddingStore& store,
                                        const Ontology& ontology, std::span<const Utterance> data,
                                        const DecodeOptions& options);

nlohmann::json prediction_to_json(const Prediction& p, const DecodeOptions& options);
void write_predictions(const std::string& path, std::span<const Prediction> preds,
                       const DecodeOptions& options);
std::vector<LabeledUtterance> load_labeled(const std::string& path);

std::vector<LabeledUtterance> as_labeled(std::span<const Utterance> data);
std::vector<LabeledUtterance> as_labeled(std::span<const Prediction> preds);

}  // namespace zsnlu
