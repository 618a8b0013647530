#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "decode_oracle.hpp"
#include "zsnlu/decoder.hpp"

using namespace zsnlu;
using namespace zsnlu::testing;

namespace {

UtteranceScores uniform_scores(const Ontology& o, std::size_t t, double b, double in) {
  UtteranceScores s;
  s.length = t;
  for (const auto& intent : o.intent_names()) {
    s.intent_probs[intent] = 0.5;
    for (const auto& slot : o.intent(intent).slots) {
      Tensor p(t, 3);
      for (std::size_t i = 0; i < t; ++i) {
        p(i, kBegin) = b;
        p(i, kInside) = in;
        p(i, kOutside) = 1.0 - b - in;
      }
      s.slot_probs[{intent, slot}] = p;
    }
  }
  return s;
}

}  // namespace

TEST(LabelSpace, CanonicalColumns) {
  const LabelSpace l({"year", "artist"});
  EXPECT_EQ(l.size(), 5u);
  EXPECT_EQ(l.label(0), "B-artist");
  EXPECT_EQ(l.label(1), "I-artist");
  EXPECT_EQ(l.label(3), "I-year");
  EXPECT_EQ(l.label(4), "O");
  EXPECT_EQ(l.column("B-year"), 2u);
  EXPECT_THROW(l.column("B-city"), DecodeError);
}

TEST(BeamMatrix, ZeroSlotProbabilityGivesCertainOutside) {
  const Ontology o = weather_ontology();
  const BeamMatrix m = build_beam_matrix(uniform_scores(o, 2, 0.0, 0.0), o);
  EXPECT_EQ(m.probs(0, m.labels.outside()), 1.0 - 6 * 1e-7);
  EXPECT_EQ(m.probs(0, 0), 1e-7);
}

TEST(BeamMatrix, OverfullSlotMassFloorsOutside) {
  const Ontology o = weather_ontology();
  // Three slots with B=0.3, I=0.13333: slot mass 1.3.
  const BeamMatrix m = build_beam_matrix(uniform_scores(o, 1, 0.3, 0.4 / 3.0), o);
  EXPECT_EQ(m.probs(0, m.labels.outside()), 1e-7);
}

TEST(BeamMatrix, AveragesAcrossIntentsSharingTheSlot) {
  const Ontology o = weather_ontology();
  UtteranceScores s = uniform_scores(o, 1, 0.0, 0.0);
  s.slot_probs[{"GetWeather", "city"}](0, kBegin) = 0.2;
  s.slot_probs[{"BookRestaurant", "city"}](0, kBegin) = 0.4;
  const BeamMatrix m = build_beam_matrix(s, o);
  EXPECT_DOUBLE_EQ(m.probs(0, m.labels.begin_of(*m.labels.slot_index("city"))), 0.3);
}

TEST(BeamMatrix, MissingRunThrows) {
  const Ontology o = weather_ontology();
  UtteranceScores s = uniform_scores(o, 1, 0.1, 0.1);
  s.slot_probs.erase({"GetWeather", "city"});
  EXPECT_THROW(build_beam_matrix(s, o), DecodeError);
}

TEST(BeamMatrix, OutsideColumnIsExactlyTheFlooredRemainder) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance inst = random_instance(rng);
    const auto& m = inst.matrix;
    for (std::size_t i = 0; i < m.probs.rows(); ++i) {
      double total = 0.0;
      for (std::size_t c = 0; c < m.labels.outside(); ++c) {
        EXPECT_GE(m.probs(i, c), 1e-7);
        EXPECT_LE(m.probs(i, c), 1.0);
        total += m.probs(i, c);
      }
      EXPECT_EQ(m.probs(i, m.labels.outside()), std::max(1e-7, 1.0 - total));
    }
  }
}

TEST(Legality, Examples) {
  const Ontology o = weather_ontology();
  const LabelSpace l(o.slot_names());
  const auto col = [&](const char* label) { return l.column(label); };
  EXPECT_FALSE(is_legal_transition(l, col("O"), col("I-city"), "GetWeather", o));
  EXPECT_FALSE(is_legal_transition(l, std::nullopt, col("I-city"), "GetWeather", o));
  EXPECT_TRUE(is_legal_transition(l, col("B-city"), col("I-city"), "GetWeather", o));
  EXPECT_FALSE(is_legal_transition(l, col("B-city"), col("I-condition_description"), "GetWeather", o));
  EXPECT_FALSE(is_legal_transition(l, col("O"), col("B-party_size_number"), "GetWeather", o));
  EXPECT_TRUE(is_legal_transition(l, col("O"), col("B-party_size_number"), "BookRestaurant", o));
  EXPECT_TRUE(is_legal_transition(l, col("B-city"), col("O"), "GetWeather", o));
}

TEST(BeamSearch, SingleTokenPicksArgmax) {
  const Ontology o = make_ontology({{"A", {"x", "y"}}});
  UtteranceScores s = uniform_scores(o, 1, 0.1, 0.05);
  s.slot_probs[{"A", "y"}](0, kBegin) = 0.6;
  const BeamMatrix m = build_beam_matrix(s, o);
  const DecodedPath p = beam_search(m, s.intent_probs, o);
  EXPECT_EQ(columns_to_bio(m.labels, p.columns), (std::vector<std::string>{"B-y"}));
}

TEST(BeamSearch, IllegalSlotUnderTrueIntentIsReplacedByLegalAlternative) {
  // "will it be sunny in paris for four": party_size_number has the highest
  // raw probability on "four" but cannot occur with GetWeather.
  const Ontology o = weather_ontology();
  UtteranceScores s = uniform_scores(o, 3, 0.02, 0.01);
  s.intent_probs = {{"GetWeather", 0.95}, {"BookRestaurant", 0.02}};
  s.slot_probs[{"GetWeather", "city"}](1, kBegin) = 0.9;
  s.slot_probs[{"BookRestaurant", "city"}](1, kBegin) = 0.9;
  s.slot_probs[{"BookRestaurant", "party_size_number"}](2, kBegin) = 0.8;
  s.slot_probs[{"GetWeather", "condition_description"}](2, kBegin) = 0.3;
  const BeamMatrix m = build_beam_matrix(s, o);
  const auto pn = m.labels.begin_of(*m.labels.slot_index("party_size_number"));
  for (std::size_t c = 0; c < m.labels.size(); ++c) EXPECT_LE(m.probs(2, c), m.probs(2, pn));

  const DecodedPath p = beam_search(m, s.intent_probs, o);
  EXPECT_EQ(p.intent, "GetWeather");
  const auto tags = columns_to_bio(m.labels, p.columns);
  EXPECT_EQ(tags, (std::vector<std::string>{"O", "B-city", "B-condition_description"}));
  EXPECT_TRUE(legal_sequence(tags, p.intent, o));
}

TEST(BeamSearch, EqualsBruteForceWhenBeamCoversAllPrefixes) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const Instance inst = random_instance(rng);
    std::size_t prefixes = 0;
    const DecodedPath expected = brute_force(inst, &prefixes);
    BeamOptions opt;
    opt.width = prefixes;
    opt.top_intents = 3;
    const DecodedPath got = beam_search(inst.matrix, inst.intent_probs, inst.ontology, opt);
    ASSERT_EQ(got.intent, expected.intent) << "trial " << trial;
    ASSERT_EQ(got.columns, expected.columns) << "trial " << trial;
    ASSERT_EQ(got.score, expected.score) << "trial " << trial;
  }
}

TEST(BeamSearch, NarrowBeamsAreLegalAndBounded) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const Instance inst = random_instance(rng);
    const DecodedPath optimum = brute_force(inst, nullptr);
    for (std::size_t v : {1, 2, 3}) {
      for (bool per_intent : {true, false}) {
        BeamOptions opt;
        opt.width = v;
        opt.per_intent = per_intent;
        const DecodedPath p = beam_search(inst.matrix, inst.intent_probs, inst.ontology, opt);
        EXPECT_TRUE(legal_sequence(columns_to_bio(inst.matrix.labels, p.columns), p.intent, inst.ontology));
        EXPECT_LE(p.score, optimum.score);
        EXPECT_TRUE(std::isfinite(p.score));
      }
    }
  }
}

TEST(BeamSearch, PredictedIntentIsAmongTopIntents) {
  const Ontology o = make_ontology({{"A", {"x"}}, {"B", {"x"}}, {"C", {"x"}}, {"D", {"x"}}});
  UtteranceScores s = uniform_scores(o, 2, 0.1, 0.1);
  // D has the weakest intent score but by far the best emissions.
  s.intent_probs = {{"A", 0.5}, {"B", 0.4}, {"C", 0.3}, {"D", 0.2}};
  const BeamMatrix m = build_beam_matrix(s, o);
  BeamOptions opt;
  opt.top_intents = 3;
  EXPECT_NE(beam_search(m, s.intent_probs, o, opt).intent, "D");
  EXPECT_EQ(beam_search(m, s.intent_probs, o, opt).intent, "A");
}

TEST(BeamSearch, RejectsUnusableInput) {
  const Ontology o = make_ontology({{"A", {"x"}}});
  UtteranceScores s = uniform_scores(o, 1, 0.1, 0.1);
  const BeamMatrix m = build_beam_matrix(s, o);
  BeamOptions zero;
  zero.width = 0;
  EXPECT_THROW(beam_search(m, s.intent_probs, o, zero), DecodeError);
  EXPECT_THROW(beam_search(m, {{"A", 0.0}}, o), DecodeError);
  EXPECT_THROW(beam_search(m, {{"A", std::nan("")}}, o), DecodeError);
}

TEST(AggregateIndependent, Examples) {
  auto table = [](std::vector<std::array<double, 3>> rows) {
    Tensor t(rows.size(), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < 3; ++c) t(i, c) = rows[i][c];
    }
    return t;
  };
  const std::array<double, 3> o = {0.1, 0.1, 0.8};
  std::map<std::string, Tensor> single = {{"year", table({o, o, o, {0.7, 0.1, 0.2}})},
                                          {"artist", table({o, o, o, o})}};
  EXPECT_EQ(aggregate_independent(single, 4), (std::vector<std::string>{"O", "O", "O", "B-year"}));

  std::map<std::string, Tensor> none = {{"year", table({o, o})}};
  EXPECT_EQ(aggregate_independent(none, 2), (std::vector<std::string>{"O", "O"}));

  std::map<std::string, Tensor> overlap = {
      {"city", table({{0.6, 0.1, 0.3}, {0.1, 0.7, 0.2}, o})},
      {"state", table({o, {0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}})}};
  EXPECT_EQ(aggregate_independent(overlap, 3), (std::vector<std::string>{"O", "B-state", "I-state"}));
  EXPECT_THROW(aggregate_independent(overlap, 4), DecodeError);
}

TEST(BeamSearch, WiderBeamNeverLowersTheScore) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const Instance inst = random_instance(rng);
    double previous = -INFINITY;
    for (std::size_t v = 1; v <= 6; ++v) {
      BeamOptions opt;
      opt.width = v;
      const double score = beam_search(inst.matrix, inst.intent_probs, inst.ontology, opt).score;
      EXPECT_GE(score, previous) << "trial " << trial << " V=" << v;
      previous = score;
    }
  }
}
