#include "zsnlu/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "zsnlu/corpus.hpp"
#include "zsnlu/encoder.hpp"

namespace zsnlu {

GradCheckReport check_gradients(ParamStore& params, const std::function<Var(Graph&)>& build,
                                double step, double floor) {
  params.zero_grad();
  {
    Graph g;
    g.backward(build(g));
  }
  auto evaluate = [&] {
    Graph g;
    return g.value(build(g)).item();
  };

  GradCheckReport report;
  for (auto& p : params.all()) {
    ParamGradError e{p.name, p.group, p.value.size(), 0.0, 0.0};
    const bool trainable = params.trainable(p);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double plus = evaluate();
      p.value[i] = saved - step;
      const double minus = evaluate();
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = trainable ? p.grad[i] : 0.0;
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
      e.max_rel_error = std::max(e.max_rel_error, rel);
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.max_abs_error = std::max(report.max_abs_error, e.max_abs_error);
    report.params.push_back(std::move(e));
  }
  return report;
}

namespace {

std::string words(const std::string& stem, std::size_t n) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < n; ++i) parts.push_back(stem + std::to_string(i));
  return join_tokens(parts);
}

}  // namespace

GradCheckReport grad_check_model(const GradCheckShape& shape, IntentHead head, bool use_gamma,
                                 std::uint64_t seed, double step) {
  // One intent with L slots; every text gets a toy embedding.
  nlohmann::json doc;
  std::vector<std::string> slot_names;
  for (std::size_t l = 0; l < shape.intent_slots; ++l) {
    const std::string name = "slot" + std::string(1, static_cast<char>('a' + l));
    slot_names.push_back(name);
    nlohmann::json examples = nlohmann::json::array();
    for (std::size_t k = 0; k < shape.exemplars; ++k) examples.push_back(words(name + "v" + std::to_string(k) + "w", k + 1));
    doc["slots"][name] = {{"examples", examples}, {"description", words(name + "d", shape.slot_words)}};
  }
  doc["intents"]["Probe"] = {{"slots", slot_names}, {"description", words("intent", shape.intent_words)}};
  const Ontology ontology = Ontology::from_json(doc);

  ToyEncoder encoder(shape.dim_enc, seed);
  EmbeddingStore store(shape.dim_enc);
  for (const auto& text : ontology.required_texts()) store.insert(encoder.encode(text));

  std::vector<std::string> tokens;
  for (std::size_t t = 0; t < shape.tokens; ++t) tokens.push_back("tok" + std::to_string(t));
  Utterance u;
  u.tokens = tokens;
  u.text = join_tokens(tokens);
  u.intent = "Probe";
  u.bio.assign(shape.tokens, "O");
  if (shape.tokens >= 3) {
    u.bio[1] = "B-" + slot_names[0];
    u.bio[2] = "I-" + slot_names[0];
  }
  store.insert(encoder.encode(u.text));

  ModelConfig config;
  config.dim_enc = shape.dim_enc;
  config.dim = shape.dim;
  config.l_max = shape.intent_slots;
  config.intent_head = head;
  config.use_gamma = use_gamma;
  JointModel model(config, seed);
  // Move every tensor off its structured initialization so no entry sits on
  // an identity/zero special case.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (auto& p : model.params().all()) {
    for (double& v : p.value.values()) v += noise(rng);
  }

  const PairInputs in = resolve_inputs(store, ontology, u, "Probe", slot_names[0]);
  const std::vector<int> targets = slot_targets(u, slot_names[0]);
  return check_gradients(
      model.params(),
      [&](Graph& g) {
        const BoundParams p = model.bind(g);
        const JointVars out = forward_joint(g, p, config, in);
        return joint_loss(g, p, config, out, targets, true);
      },
      step);
}

}  // namespace zsnlu
