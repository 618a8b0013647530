#include "zsnlu/pipeline.hpp"

#include <cmath>
#include <fstream>

namespace zsnlu {

std::string_view decode_mode_name(DecodeMode m) {
  switch (m) {
    case DecodeMode::kIndependent: return "independent";
    case DecodeMode::kBeam: return "beam";
    case DecodeMode::kSlotOnly: return "slot-only";
  }
  return "independent";
}

UtteranceScores score_utterance(const JointModel& model, const EmbeddingStore& store,
                                const Ontology& ontology, const Utterance& utterance) {
  UtteranceScores scores;
  scores.length = utterance.tokens.size();
  for (const auto& [intent, info] : ontology.intents()) {
    if (info.slots.empty()) {
      throw DecodeError("intent " + intent + " has no slots; the model needs at least one");
    }
    for (const auto& slot : info.slots) {
      const JointOutput out = predict_pair(model, resolve_inputs(store, ontology, utterance, intent, slot));
      scores.slot_probs.emplace(std::make_pair(intent, slot), out.slot_probs);
      // z_a does not depend on the paired slot; keep the first run's value.
      scores.intent_probs.emplace(intent, out.intent_prob);
    }
  }
  return scores;
}

namespace {

std::string best_intent(const std::map<std::string, double>& intent_probs) {
  std::string best;
  double top = -1.0;
  for (const auto& [intent, z] : intent_probs) {
    if (z > top) {
      top = z;
      best = intent;
    }
  }
  return best;
}

}  // namespace

Prediction decode_scores(const UtteranceScores& scores, const Ontology& ontology,
                         const DecodeOptions& options, std::vector<std::string> tokens) {
  Prediction p;
  p.tokens = std::move(tokens);
  switch (options.mode) {
    case DecodeMode::kBeam: {
      const BeamMatrix matrix = build_beam_matrix(scores, ontology, options.epsilon);
      const DecodedPath path = beam_search(matrix, scores.intent_probs, ontology, options.beam);
      p.intent = path.intent;
      p.bio = columns_to_bio(matrix.labels, path.columns);
      p.score = path.score;
      break;
    }
    case DecodeMode::kIndependent: {
      p.intent = best_intent(scores.intent_probs);
      std::map<std::string, Tensor> per_slot;
      for (const auto& slot : ontology.intent(p.intent).slots) {
        per_slot.emplace(slot, scores.slot_probs.at({p.intent, slot}));
      }
      p.bio = aggregate_independent(per_slot, scores.length);
      p.score = std::log(scores.intent_probs.at(p.intent));
      break;
    }
    case DecodeMode::kSlotOnly: {
      p.intent = best_intent(scores.intent_probs);
      p.bio = aggregate_independent(average_slot_probs(scores, ontology), scores.length);
      p.score = std::log(scores.intent_probs.at(p.intent));
      break;
    }
  }
  return p;
}

std::vector<Prediction> predict_dataset(const JointModel& model, const EmbeddingStore& store,
                                        const Ontology& ontology, std::span<const Utterance> data,
                                        const DecodeOptions& options) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (const auto& u : data) {
    out.push_back(decode_scores(score_utterance(model, store, ontology, u), ontology, options, u.tokens));
  }
  return out;
}

nlohmann::json prediction_to_json(const Prediction& p, const DecodeOptions& options) {
  nlohmann::json j = {{"tokens", p.tokens}, {"intent", p.intent}, {"bio", p.bio}, {"score", p.score}};
  if (options.mode == DecodeMode::kBeam) {
    j["beam"] = {{"V", options.beam.width}, {"eps", options.epsilon}};
  } else {
    j["beam"] = nullptr;
  }
  return j;
}

void write_predictions(const std::string& path, std::span<const Prediction> preds,
                       const DecodeOptions& options) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions " + path);
  for (const auto& p : preds) out << prediction_to_json(p, options).dump() << '\n';
}

std::vector<LabeledUtterance> load_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open " + path);
  std::vector<LabeledUtterance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_whitespace(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("tokens").get<std::vector<std::string>>(), j.at("intent").get<std::string>(),
                     j.at("bio").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw EvalError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (out.back().bio.size() != out.back().tokens.size()) {
      throw EvalError(path + ":" + std::to_string(line_no) + ": bio and tokens differ in length");
    }
  }
  return out;
}

std::vector<LabeledUtterance> as_labeled(std::span<const Utterance> data) {
  std::vector<LabeledUtterance> out;
  for (const auto& u : data) out.push_back({u.tokens, u.intent, u.bio});
  return out;
}

std::vector<LabeledUtterance> as_labeled(std::span<const Prediction> preds) {
  std::vector<LabeledUtterance> out;
  for (const auto& p : preds) out.push_back({p.tokens, p.intent, p.bio});
  return out;
}

}  // namespace zsnlu
