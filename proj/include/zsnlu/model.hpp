#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsnlu/corpus.hpp"
#include "zsnlu/encoder.hpp"
#include "zsnlu/graph.hpp"
#include "zsnlu/layers.hpp"

namespace zsnlu {

enum class IntentHead {
  kWordLevel,      // attention over intent-description tokens, max-pooled
  kSentenceLevel,  // x_cls (.) a_cls, elementwise
};

std::string_view intent_head_name(IntentHead h);
IntentHead parse_intent_head(std::string_view name);

struct ModelConfig {
  std::size_t dim_enc = 0;  // raw embedding width
  std::size_t dim = 16;     // translated width
  std::size_t hidden = 0;   // biLSTM width per direction; 0 means dim
  std::size_t l_max = 1;    // widest intent slot list; gamma is padded to this
  IntentHead intent_head = IntentHead::kWordLevel;
  bool use_gamma = true;
  bool joint = true;  // false drops the intent loss (slot-only ablation)
  bool linear_translation = false;

  std::size_t hidden_size() const { return hidden == 0 ? dim : hidden; }
  std::size_t lstm_input() const { return 4 * dim + l_max; }
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Graph leaves for every model tensor.
struct BoundParams {
  struct Translation {
    Var w1, b1, w2, b2;
  };
  Translation sentence, word;
  Var adapter_w, adapter_b;
  Var exemplar_attention, intent_attention, constraint_attention;
  LstmWeights lstm_fwd, lstm_bwd;
  Var slot_w, slot_b;
  Var intent_w, intent_b;
  Var log_weight_slot, log_weight_intent;
};

class JointModel {
 public:
  JointModel(ModelConfig config, std::uint64_t seed);
  // Adopts checkpointed tensors; names and shapes must match the config.
  JointModel(ModelConfig config, ParamStore params);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Trainable leaves (gradients flow into params()).
  BoundParams bind(Graph& g);
  // Constant leaves, for inference on a shared model.
  BoundParams bind_constant(Graph& g) const;

  static ParamStore make_params(const ModelConfig& config, std::uint64_t seed);

 private:
  ModelConfig config_;
  ParamStore params_;
};

enum class Representation { kSentence, kWord };

// Adapter then Z_S (sentence) or Z_W (word): two dense layers, ReLU between.
// `raw` is 1 x dim_enc for sentences, T x dim_enc for words.
Var translate(Graph& g, const BoundParams& p, const Tensor& raw, Representation which,
              bool linear = false);

// Mean of translated token vectors of one text (1 x dim).
Var translate_mean(Graph& g, const BoundParams& p, const Tensor& raw_tokens, bool linear = false);

// Per-token attention over exemplar means (K x dim). Returns T x dim.
Var slot_exemplar_attention(Graph& g, Var tokens, Var exemplar_means, Var w_s);

// Max over tokens of the per-token softmax over the intent's slot-description
// means (L x dim), zero padded to 1 x l_max.
Var global_slot_constraint(Graph& g, Var tokens, Var slot_means, Var w_r, std::size_t l_max);

// biLSTM over [x_i, b_cls, a_cls, gamma, e_s_i] then a 3-way softmax. T x 3.
Var slot_head(Graph& g, const BoundParams& p, Var tokens, Var slot_cls, Var intent_cls, Var gamma,
              Var exemplar_context);

// sigmoid(Dense(a_cls ++ gamma ++ g)) with g max-pooled from attention over
// intent-description tokens.
Var intent_head_wlevel(Graph& g, const BoundParams& p, Var tokens, Var intent_tokens, Var intent_cls,
                       Var gamma);

// Same dense head with g = x_cls (.) a_cls.
Var intent_head_slevel(Graph& g, const BoundParams& p, Var utterance_cls, Var intent_cls, Var gamma);

// Store records needed for one (utterance, intent, slot) evaluation.
struct PairInputs {
  const EmbeddingRecord* utterance = nullptr;
  const EmbeddingRecord* intent_description = nullptr;
  const EmbeddingRecord* slot_description = nullptr;
  std::vector<const EmbeddingRecord*> exemplars;
  std::vector<const EmbeddingRecord*> intent_slot_descriptions;  // canonical order
};

PairInputs resolve_inputs(const EmbeddingStore& store, const Ontology& ontology,
                          const Utterance& utterance, std::string_view intent, std::string_view slot);

struct JointVars {
  Var slot_probs;   // T x 3
  Var intent_prob;  // 1 x 1
  Var gamma;        // 1 x l_max
};

JointVars forward_joint(Graph& g, const BoundParams& p, const ModelConfig& config,
                        const PairInputs& in);

// exp(-s_slot) L_slot + s_slot + exp(-s_intent) L_intent + s_intent; the
// intent terms are dropped for slot-only models.
Var joint_loss(Graph& g, const BoundParams& p, const ModelConfig& config, const JointVars& out,
               std::span<const int> bio_targets, bool intent_present);

struct JointOutput {
  Tensor slot_probs;
  double intent_prob = 0.0;
  Tensor gamma;
};

JointOutput predict_pair(const JointModel& model, const PairInputs& in);

}  // namespace zsnlu
