#include "zsnlu/model.hpp"

#include <cmath>
#include <random>

namespace zsnlu {

std::string_view intent_head_name(IntentHead h) {
  return h == IntentHead::kWordLevel ? "wlevel" : "slevel";
}

IntentHead parse_intent_head(std::string_view name) {
  if (name == "wlevel") return IntentHead::kWordLevel;
  if (name == "slevel") return IntentHead::kSentenceLevel;
  throw std::invalid_argument("intent head must be wlevel or slevel, got '" + std::string(name) + "'");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"dim_enc", dim_enc},
          {"dim", dim},
          {"hidden", hidden},
          {"l_max", l_max},
          {"intent_head", intent_head_name(intent_head)},
          {"gamma", use_gamma},
          {"joint", joint},
          {"linear_translation", linear_translation}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim_enc = j.at("dim_enc").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.l_max = j.at("l_max").get<std::size_t>();
  c.intent_head = parse_intent_head(j.at("intent_head").get<std::string>());
  c.use_gamma = j.at("gamma").get<bool>();
  c.joint = j.at("joint").get<bool>();
  c.linear_translation = j.value("linear_translation", false);
  return c;
}

// ---------------------------------------------------------------------------

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void check_config(const ModelConfig& c) {
  if (c.dim_enc == 0 || c.dim == 0 || c.l_max == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
}

}  // namespace

ParamStore JointModel::make_params(const ModelConfig& c, std::uint64_t seed) {
  check_config(c);
  std::mt19937_64 rng(seed);
  const std::size_t h = c.hidden_size();
  ParamStore ps;
  for (const char* which : {"sentence", "word"}) {
    const std::string prefix = std::string("translate.") + which;
    ps.add(prefix + ".w1", ParamGroup::kTranslation, glorot(c.dim_enc, c.dim, rng));
    ps.add(prefix + ".b1", ParamGroup::kTranslation, Tensor(1, c.dim));
    ps.add(prefix + ".w2", ParamGroup::kTranslation, glorot(c.dim, c.dim, rng));
    ps.add(prefix + ".b2", ParamGroup::kTranslation, Tensor(1, c.dim));
  }
  ps.add("adapter.w", ParamGroup::kAdapter, Tensor::identity(c.dim_enc));
  ps.add("adapter.b", ParamGroup::kAdapter, Tensor(1, c.dim_enc));
  // Bilinear scores start as plain dot products.
  ps.add("attention.exemplar", ParamGroup::kRest, Tensor::identity(c.dim));
  ps.add("attention.intent", ParamGroup::kRest, Tensor::identity(c.dim));
  ps.add("attention.constraint", ParamGroup::kRest, Tensor::identity(c.dim));
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string prefix = std::string("lstm.") + dir;
    ps.add(prefix + ".input", ParamGroup::kRest, glorot(c.lstm_input(), 4 * h, rng));
    ps.add(prefix + ".recurrent", ParamGroup::kRest, glorot(h, 4 * h, rng));
    Tensor bias(1, 4 * h);
    for (std::size_t i = h; i < 2 * h; ++i) bias[i] = 1.0;  // forget gate
    ps.add(prefix + ".bias", ParamGroup::kRest, std::move(bias));
  }
  ps.add("slot_head.w", ParamGroup::kRest, glorot(2 * h, kNumBioClasses, rng));
  ps.add("slot_head.b", ParamGroup::kRest, Tensor(1, kNumBioClasses));
  ps.add("intent_head.w", ParamGroup::kRest, glorot(2 * c.dim + c.l_max, 1, rng));
  ps.add("intent_head.b", ParamGroup::kRest, Tensor(1, 1));
  ps.add("loss.log_weight_slot", ParamGroup::kRest, Tensor(1, 1));
  ps.add("loss.log_weight_intent", ParamGroup::kRest, Tensor(1, 1));
  return ps;
}

JointModel::JointModel(ModelConfig config, std::uint64_t seed)
    : config_(config), params_(make_params(config, seed)) {}

JointModel::JointModel(ModelConfig config, ParamStore params) : config_(config) {
  const ParamStore reference = make_params(config, 0);
  if (params.size() != reference.size()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(params.size()) +
                                " tensors, model expects " + std::to_string(reference.size()));
  }
  for (const auto& ref : reference.all()) {
    const Parameter& p = params.at(ref.name);
    if (!p.value.same_shape(ref.value) || p.group != ref.group) {
      throw std::invalid_argument("tensor " + ref.name + " does not match the model config");
    }
  }
  params_ = std::move(params);
}

namespace {

template <typename Leaf>
BoundParams bind_with(Leaf leaf) {
  BoundParams b;
  auto translation = [&](const std::string& prefix) {
    return BoundParams::Translation{leaf(prefix + ".w1"), leaf(prefix + ".b1"), leaf(prefix + ".w2"),
                                    leaf(prefix + ".b2")};
  };
  b.sentence = translation("translate.sentence");
  b.word = translation("translate.word");
  b.adapter_w = leaf("adapter.w");
  b.adapter_b = leaf("adapter.b");
  b.exemplar_attention = leaf("attention.exemplar");
  b.intent_attention = leaf("attention.intent");
  b.constraint_attention = leaf("attention.constraint");
  b.lstm_fwd = {leaf("lstm.fwd.input"), leaf("lstm.fwd.recurrent"), leaf("lstm.fwd.bias")};
  b.lstm_bwd = {leaf("lstm.bwd.input"), leaf("lstm.bwd.recurrent"), leaf("lstm.bwd.bias")};
  b.slot_w = leaf("slot_head.w");
  b.slot_b = leaf("slot_head.b");
  b.intent_w = leaf("intent_head.w");
  b.intent_b = leaf("intent_head.b");
  b.log_weight_slot = leaf("loss.log_weight_slot");
  b.log_weight_intent = leaf("loss.log_weight_intent");
  return b;
}

}  // namespace

BoundParams JointModel::bind(Graph& g) {
  return bind_with([&](const std::string& name) { return g.parameter(params_, params_.at(name)); });
}

BoundParams JointModel::bind_constant(Graph& g) const {
  return bind_with([&](const std::string& name) { return g.constant(params_.at(name).value); });
}

// ---------------------------------------------------------------------------

Var translate(Graph& g, const BoundParams& p, const Tensor& raw, Representation which, bool linear) {
  if (raw.cols() != g.value(p.adapter_w).rows()) {
    throw ShapeError("embedding width " + std::to_string(raw.cols()) + " does not match model input " +
                     std::to_string(g.value(p.adapter_w).rows()));
  }
  const auto& z = which == Representation::kSentence ? p.sentence : p.word;
  const Var adapted = affine(g, g.constant(raw), p.adapter_w, p.adapter_b);
  Var hidden = affine(g, adapted, z.w1, z.b1);
  if (!linear) hidden = g.relu(hidden);
  return affine(g, hidden, z.w2, z.b2);
}

Var translate_mean(Graph& g, const BoundParams& p, const Tensor& raw_tokens, bool linear) {
  if (raw_tokens.rows() == 0) throw ShapeError("cannot pool a text with no tokens");
  return g.mean_rows(translate(g, p, raw_tokens, Representation::kWord, linear));
}

Var slot_exemplar_attention(Graph& g, Var tokens, Var exemplar_means, Var w_s) {
  if (g.value(exemplar_means).rows() == 0) throw ShapeError("slot has no exemplars");
  const Var scores = g.matmul(g.matmul(tokens, w_s), g.transpose(exemplar_means));
  return g.matmul(g.softmax_rows(scores), exemplar_means);
}

Var global_slot_constraint(Graph& g, Var tokens, Var slot_means, Var w_r, std::size_t l_max) {
  const std::size_t l = g.value(slot_means).rows();
  if (l == 0) throw ShapeError("intent has no slots for the global constraint");
  if (l > l_max) throw ShapeError("intent has more slots than l_max");
  const Var scores = g.matmul(g.matmul(tokens, w_r), g.transpose(slot_means));
  const Var gamma = g.max_rows(g.softmax_rows(scores));
  if (l == l_max) return gamma;
  const Var parts[] = {gamma, g.constant(Tensor(1, l_max - l))};
  return g.concat_cols(parts);
}

Var slot_head(Graph& g, const BoundParams& p, Var tokens, Var slot_cls, Var intent_cls, Var gamma,
              Var exemplar_context) {
  const std::size_t t = g.value(tokens).rows();
  if (g.value(exemplar_context).rows() != t) throw ShapeError("token streams differ in length");
  const Var parts[] = {tokens, g.repeat_rows(slot_cls, t), g.repeat_rows(intent_cls, t),
                       g.repeat_rows(gamma, t), exemplar_context};
  const Var states = bilstm_forward(g, g.concat_cols(parts), p.lstm_fwd, p.lstm_bwd);
  return g.softmax_rows(affine(g, states, p.slot_w, p.slot_b));
}

namespace {

Var intent_dense(Graph& g, const BoundParams& p, Var intent_cls, Var gamma, Var pooled) {
  const Var parts[] = {intent_cls, gamma, pooled};
  return g.sigmoid(affine(g, g.concat_cols(parts), p.intent_w, p.intent_b));
}

}  // namespace

Var intent_head_wlevel(Graph& g, const BoundParams& p, Var tokens, Var intent_tokens, Var intent_cls,
                       Var gamma) {
  if (g.value(intent_tokens).rows() == 0) throw ShapeError("empty intent description");
  const Var scores = g.matmul(g.matmul(tokens, p.intent_attention), g.transpose(intent_tokens));
  const Var attended = g.matmul(g.softmax_rows(scores), intent_tokens);
  return intent_dense(g, p, intent_cls, gamma, g.max_rows(attended));
}

Var intent_head_slevel(Graph& g, const BoundParams& p, Var utterance_cls, Var intent_cls, Var gamma) {
  if (!g.value(utterance_cls).same_shape(g.value(intent_cls))) {
    throw ShapeError("sentence vectors differ in width");
  }
  return intent_dense(g, p, intent_cls, gamma, g.mul(utterance_cls, intent_cls));
}

// ---------------------------------------------------------------------------

PairInputs resolve_inputs(const EmbeddingStore& store, const Ontology& ontology,
                          const Utterance& utterance, std::string_view intent, std::string_view slot) {
  PairInputs in;
  in.utterance = &store.lookup(utterance.text);
  if (in.utterance->tokens.size() != utterance.tokens.size()) {
    throw StoreError("embedding for \"" + utterance.text + "\" has " +
                     std::to_string(in.utterance->tokens.size()) + " tokens, dataset has " +
                     std::to_string(utterance.tokens.size()));
  }
  const IntentInfo& intent_info = ontology.intent(intent);
  const SlotInfo& slot_info = ontology.slot(slot);
  in.intent_description = &store.lookup(intent_info.description);
  in.slot_description = &store.lookup(slot_info.description);
  for (const auto& example : slot_info.examples) in.exemplars.push_back(&store.lookup(example));
  for (const auto& s : intent_info.slots) {
    in.intent_slot_descriptions.push_back(&store.lookup(ontology.slot(s).description));
  }
  return in;
}

JointVars forward_joint(Graph& g, const BoundParams& p, const ModelConfig& config,
                        const PairInputs& in) {
  const bool linear = config.linear_translation;
  const Var tokens = translate(g, p, in.utterance->token_vecs, Representation::kWord, linear);
  const Var intent_cls = translate(g, p, in.intent_description->cls, Representation::kSentence, linear);
  const Var slot_cls = translate(g, p, in.slot_description->cls, Representation::kSentence, linear);

  Var gamma;
  if (config.use_gamma) {
    std::vector<Var> means;
    for (const auto* rec : in.intent_slot_descriptions) {
      means.push_back(translate_mean(g, p, rec->token_vecs, linear));
    }
    if (means.empty()) throw ShapeError("intent has no slots for the global constraint");
    gamma = global_slot_constraint(g, tokens, g.concat_rows(means), p.constraint_attention, config.l_max);
  } else {
    gamma = g.constant(Tensor(1, config.l_max));
  }

  std::vector<Var> exemplar_means;
  for (const auto* rec : in.exemplars) exemplar_means.push_back(translate_mean(g, p, rec->token_vecs, linear));
  if (exemplar_means.empty()) throw ShapeError("slot has no exemplars");
  const Var context =
      slot_exemplar_attention(g, tokens, g.concat_rows(exemplar_means), p.exemplar_attention);

  JointVars out;
  out.gamma = gamma;
  out.slot_probs = slot_head(g, p, tokens, slot_cls, intent_cls, gamma, context);
  if (config.intent_head == IntentHead::kWordLevel) {
    const Var intent_tokens =
        translate(g, p, in.intent_description->token_vecs, Representation::kWord, linear);
    out.intent_prob = intent_head_wlevel(g, p, tokens, intent_tokens, intent_cls, gamma);
  } else {
    const Var utterance_cls = translate(g, p, in.utterance->cls, Representation::kSentence, linear);
    out.intent_prob = intent_head_slevel(g, p, utterance_cls, intent_cls, gamma);
  }
  return out;
}

Var joint_loss(Graph& g, const BoundParams& p, const ModelConfig& config, const JointVars& out,
               std::span<const int> bio_targets, bool intent_present) {
  auto weighted = [&](Var task_loss, Var log_weight) {
    return g.add(g.mul(g.exp(g.scale(log_weight, -1.0)), task_loss), log_weight);
  };
  const Var slot = weighted(g.cross_entropy_rows(out.slot_probs, bio_targets), p.log_weight_slot);
  if (!config.joint) return slot;
  const Var intent = weighted(g.binary_cross_entropy(out.intent_prob, intent_present ? 1.0 : 0.0),
                              p.log_weight_intent);
  return g.add(slot, intent);
}

JointOutput predict_pair(const JointModel& model, const PairInputs& in) {
  Graph g;
  const BoundParams p = model.bind_constant(g);
  const JointVars v = forward_joint(g, p, model.config(), in);
  return JointOutput{g.value(v.slot_probs), g.value(v.intent_prob).item(), g.value(v.gamma)};
}

}  // namespace zsnlu
