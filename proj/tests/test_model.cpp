#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "zsnlu/model.hpp"

using namespace zsnlu;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(r, c);
  for (double& v : t.values()) v = n(rng);
  return t;
}

ModelConfig small_config() {
  ModelConfig c;
  c.dim_enc = 5;
  c.dim = 4;
  c.l_max = 3;
  return c;
}

// Plain loops, independent of the graph ops.
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b, bool relu) {
  Tensor out(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double acc = b(0, j);
      for (std::size_t k = 0; k < x.cols(); ++k) acc += x(i, k) * w(k, j);
      out(i, j) = relu ? std::max(0.0, acc) : acc;
    }
  }
  return out;
}

struct Fixture {
  EmbeddingRecord utterance, intent_desc, slot_desc, ex1, ex2, other_slot;
  PairInputs inputs() const {
    PairInputs in;
    in.utterance = &utterance;
    in.intent_description = &intent_desc;
    in.slot_description = &slot_desc;
    in.exemplars = {&ex1, &ex2};
    in.intent_slot_descriptions = {&slot_desc, &other_slot};
    return in;
  }
};

Fixture make_fixture(std::size_t dim_enc) {
  return {toy_encode("play music from 2014", dim_enc, 1), toy_encode("play music", dim_enc, 1),
          toy_encode("year", dim_enc, 1),                 toy_encode("1999", dim_enc, 1),
          toy_encode("last year", dim_enc, 1),            toy_encode("artist", dim_enc, 1)};
}

}  // namespace

TEST(ModelConfig, JsonRoundTrip) {
  ModelConfig c = small_config();
  c.intent_head = IntentHead::kSentenceLevel;
  c.use_gamma = false;
  c.hidden = 7;
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
  EXPECT_EQ(parse_intent_head("wlevel"), IntentHead::kWordLevel);
  EXPECT_THROW(parse_intent_head("both"), std::invalid_argument);
}

TEST(JointModel, ParameterGroupsAndShapes) {
  const JointModel m(small_config(), 1);
  const auto& ps = m.params();
  EXPECT_EQ(ps.at("translate.word.w1").value.shape(), (std::vector<std::size_t>{5, 4}));
  EXPECT_EQ(ps.at("adapter.w").value, Tensor::identity(5));
  EXPECT_EQ(ps.at("attention.exemplar").value, Tensor::identity(4));
  EXPECT_EQ(ps.at("lstm.fwd.input").value.shape(), (std::vector<std::size_t>{4 * 4 + 3, 16}));
  EXPECT_EQ(ps.at("intent_head.w").value.shape(), (std::vector<std::size_t>{2 * 4 + 3, 1}));
  std::map<ParamGroup, int> groups;
  for (const auto& p : ps.all()) ++groups[p.group];
  EXPECT_EQ(groups[ParamGroup::kTranslation], 8);
  EXPECT_EQ(groups[ParamGroup::kAdapter], 2);
  EXPECT_EQ(groups[ParamGroup::kRest], 15);
  // Same seed gives the same tensors.
  const JointModel again(small_config(), 1);
  for (const auto& p : ps.all()) EXPECT_EQ(again.params().at(p.name).value, p.value);
}

TEST(JointModel, AdoptingMismatchedParamsThrows) {
  ParamStore ps = JointModel::make_params(small_config(), 2);
  ModelConfig wider = small_config();
  wider.dim = 6;
  EXPECT_THROW(JointModel(wider, ps), std::invalid_argument);
  EXPECT_NO_THROW(JointModel(small_config(), ps));
}

TEST(Translate, MatchesHandComputation) {
  std::mt19937_64 rng(5);
  JointModel m(small_config(), 3);
  for (auto& p : m.params().all()) p.value = random_tensor(p.value.rows(), p.value.cols(), rng, 0.5);
  const Tensor raw = random_tensor(3, 5, rng);
  const auto& ps = m.params();
  for (bool linear : {false, true}) {
    for (auto which : {Representation::kSentence, Representation::kWord}) {
      const std::string z = which == Representation::kSentence ? "translate.sentence" : "translate.word";
      const Tensor adapted = dense(raw, ps.at("adapter.w").value, ps.at("adapter.b").value, false);
      const Tensor hidden = dense(adapted, ps.at(z + ".w1").value, ps.at(z + ".b1").value, !linear);
      const Tensor expected = dense(hidden, ps.at(z + ".w2").value, ps.at(z + ".b2").value, false);
      Graph g;
      const BoundParams bp = m.bind_constant(g);
      const Tensor& got = g.value(translate(g, bp, raw, which, linear));
      ASSERT_TRUE(got.same_shape(expected));
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
    }
  }
}

TEST(Translate, WrongWidthThrows) {
  const JointModel m(small_config(), 1);
  Graph g;
  const BoundParams bp = m.bind_constant(g);
  EXPECT_THROW(translate(g, bp, Tensor(2, 6), Representation::kWord), ShapeError);
  EXPECT_THROW(translate_mean(g, bp, Tensor(0, 5)), ShapeError);
}

TEST(ExemplarAttention, SingleExemplarIsCopiedToEveryToken) {
  std::mt19937_64 rng(1);
  Graph g;
  const Var tokens = g.constant(random_tensor(4, 3, rng));
  const Tensor ex = random_tensor(1, 3, rng);
  const Tensor& out = g.value(slot_exemplar_attention(g, tokens, g.constant(ex),
                                                      g.constant(random_tensor(3, 3, rng))));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(r, c), ex(0, c), 1e-15);
  }
}

TEST(ExemplarAttention, IdenticalExemplarsGiveThatExemplar) {
  std::mt19937_64 rng(2);
  Graph g;
  const Tensor row = random_tensor(1, 3, rng);
  Tensor ex(2, 3);
  for (std::size_t c = 0; c < 3; ++c) ex(0, c) = ex(1, c) = row(0, c);
  const Tensor& out = g.value(slot_exemplar_attention(g, g.constant(random_tensor(2, 3, rng)),
                                                      g.constant(ex), g.constant(Tensor::identity(3))));
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(r, c), row(0, c), 1e-15);
  }
}

TEST(ExemplarAttention, TwoDimensionalHandCase) {
  // token (1,0), exemplars e1=(1,0), e2=(0,1), W=I: scores (1,0),
  // weights (e/(e+1), 1/(e+1)).
  Graph g;
  const Tensor ex(2, 2, {1.0, 0.0, 0.0, 1.0});
  const Tensor& out = g.value(slot_exemplar_attention(g, g.constant(Tensor::row({1.0, 0.0})), g.constant(ex),
                                                      g.constant(Tensor::identity(2))));
  const double e = std::exp(1.0);
  EXPECT_NEAR(out(0, 0), e / (e + 1.0), 1e-15);
  EXPECT_NEAR(out(0, 1), 1.0 / (e + 1.0), 1e-15);
}

TEST(GlobalConstraint, HandCaseAndPadding) {
  // Two tokens, two slot means. Token 0 scores (2,0), token 1 scores (0,1).
  Graph g;
  const Tensor tokens(2, 2, {2.0, 0.0, 0.0, 1.0});
  const Tensor means(2, 2, {1.0, 0.0, 0.0, 1.0});
  const Tensor& gamma = g.value(global_slot_constraint(g, g.constant(tokens), g.constant(means),
                                                       g.constant(Tensor::identity(2)), 4));
  ASSERT_EQ(gamma.shape(), (std::vector<std::size_t>{1, 4}));
  const double e = std::exp(1.0), e2 = std::exp(2.0);
  EXPECT_NEAR(gamma[0], e2 / (e2 + 1.0), 1e-15);
  EXPECT_NEAR(gamma[1], e / (e + 1.0), 1e-15);
  EXPECT_EQ(gamma[2], 0.0);
  EXPECT_EQ(gamma[3], 0.0);
  EXPECT_THROW(global_slot_constraint(g, g.constant(tokens), g.constant(means), g.constant(Tensor::identity(2)), 1),
               ShapeError);
}

TEST(GlobalConstraint, SingleSlotIsOne) {
  std::mt19937_64 rng(3);
  Graph g;
  const Tensor& gamma = g.value(global_slot_constraint(g, g.constant(random_tensor(5, 3, rng)),
                                                       g.constant(random_tensor(1, 3, rng)),
                                                       g.constant(random_tensor(3, 3, rng)), 1));
  EXPECT_DOUBLE_EQ(gamma[0], 1.0);
}

TEST(ForwardJoint, OutputsAreDistributions) {
  for (auto head : {IntentHead::kWordLevel, IntentHead::kSentenceLevel}) {
    for (bool gamma : {true, false}) {
      ModelConfig c = small_config();
      c.dim_enc = 8;
      c.intent_head = head;
      c.use_gamma = gamma;
      const JointModel m(c, 4);
      const Fixture f = make_fixture(8);
      const JointOutput out = predict_pair(m, f.inputs());
      ASSERT_EQ(out.slot_probs.shape(), (std::vector<std::size_t>{4, 3}));
      for (std::size_t r = 0; r < 4; ++r) {
        double sum = 0.0;
        for (double p : out.slot_probs.row_view(r)) {
          EXPECT_GT(p, 0.0);
          sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
      EXPECT_GT(out.intent_prob, 0.0);
      EXPECT_LT(out.intent_prob, 1.0);
      ASSERT_EQ(out.gamma.cols(), 3u);
      if (gamma) {
        EXPECT_GT(out.gamma[0], 0.0);
        EXPECT_LE(out.gamma[0] + out.gamma[1], 2.0);
      } else {
        EXPECT_EQ(out.gamma, Tensor(1, 3));
      }
      EXPECT_EQ(out.gamma[2], 0.0);
    }
  }
}

TEST(JointLoss, WeightedSumOracle) {
  ModelConfig c = small_config();
  c.dim_enc = 8;
  JointModel m(c, 6);
  m.params().at("loss.log_weight_slot").value[0] = 0.7;
  m.params().at("loss.log_weight_intent").value[0] = -0.4;
  const Fixture f = make_fixture(8);
  const JointOutput out = predict_pair(m, f.inputs());
  const std::vector<int> targets = {kOutside, kOutside, kOutside, kBegin};
  double ce = 0.0;
  for (std::size_t r = 0; r < 4; ++r) ce -= std::log(out.slot_probs(r, static_cast<std::size_t>(targets[r])));
  ce /= 4.0;
  for (bool present : {true, false}) {
    const double bce = -std::log(present ? out.intent_prob : 1.0 - out.intent_prob);
    for (bool joint : {true, false}) {
      JointModel model(c, 6);
      model.params() = m.params();
      ModelConfig mc = c;
      mc.joint = joint;
      Graph g;
      const BoundParams bp = model.bind_constant(g);
      const JointVars v = forward_joint(g, bp, mc, f.inputs());
      const double loss = g.value(joint_loss(g, bp, mc, v, targets, present)).item();
      double expected = std::exp(-0.7) * ce + 0.7;
      if (joint) expected += std::exp(0.4) * bce - 0.4;
      EXPECT_NEAR(loss, expected, 1e-12) << "joint=" << joint << " present=" << present;
    }
  }
}
