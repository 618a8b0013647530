#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "zsnlu/eval.hpp"

using namespace zsnlu;

namespace {

using Tags = std::vector<std::vector<std::string>>;

// "token gold pred" lines, blank line between utterances.
void read_conll(const std::string& path, Tags& gold, Tags& pred) {
  std::ifstream in(path);
  ASSERT_TRUE(in) << path;
  std::string line;
  std::vector<std::string> g, p;
  auto flush = [&] {
    if (g.empty()) return;
    gold.push_back(g);
    pred.push_back(p);
    g.clear();
    p.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) {
      flush();
      continue;
    }
    std::istringstream fields(line);
    std::string token, gt, pt;
    fields >> token >> gt >> pt;
    g.push_back(gt);
    p.push_back(pt);
  }
  flush();
}

}  // namespace

TEST(ConllSpanF1, HandCountedFixture) {
  Tags gold, pred;
  read_conll(std::string(ZSNLU_TEST_DATA) + "/conll50.txt", gold, pred);
  ASSERT_EQ(gold.size(), 50u);
  const SpanScores s = conll_span_f1(gold, pred);
  // 10 exact + 5 repaired orphan-I predictions.
  EXPECT_EQ(s.counts.true_positives, 15u);
  // 10 boundary + 10 type + 5 spurious.
  EXPECT_EQ(s.counts.false_positives, 25u);
  // 10 boundary + 10 type + 20 missed by empty predictions.
  EXPECT_EQ(s.counts.false_negatives, 40u);
  EXPECT_DOUBLE_EQ(s.precision, 100.0 * 15 / 40);
  EXPECT_DOUBLE_EQ(s.recall, 100.0 * 15 / 55);
  EXPECT_NEAR(s.f1, 100.0 * 30 / 95, 1e-12);
}

TEST(ConllSpanF1, PerfectAndEmpty) {
  const Tags gold = {{"O", "B-a", "I-a"}, {"B-b"}};
  const SpanScores same = conll_span_f1(gold, gold);
  EXPECT_DOUBLE_EQ(same.f1, 100.0);
  const Tags none = {{"O", "O", "O"}, {"O"}};
  const SpanScores empty = conll_span_f1(gold, none);
  EXPECT_EQ(empty.counts.false_negatives, 2u);
  EXPECT_DOUBLE_EQ(empty.precision, 0.0);
  EXPECT_DOUBLE_EQ(empty.f1, 0.0);
  const SpanScores nothing = conll_span_f1(none, none);
  EXPECT_DOUBLE_EQ(nothing.f1, 0.0);
}

TEST(ConllSpanF1, TypeChangeInsideChunkSplitsIt) {
  const Tags gold = {{"B-a", "I-a"}};
  const Tags pred = {{"B-a", "I-b"}};
  const SpanScores s = conll_span_f1(gold, pred);
  EXPECT_EQ(s.counts.true_positives, 0u);
  EXPECT_EQ(s.counts.false_positives, 2u);
  EXPECT_EQ(s.counts.false_negatives, 1u);
}

TEST(ConllSpanF1, ShapeMismatchThrows) {
  const Tags gold = {{"O", "O"}};
  const Tags shorter = {{"O"}};
  const Tags fewer = {};
  EXPECT_THROW(conll_span_f1(gold, shorter), EvalError);
  EXPECT_THROW(conll_span_f1(gold, fewer), EvalError);
}

TEST(IntentAccuracy, Examples) {
  const std::vector<std::string> gold = {"a", "b", "c", "a"};
  const std::vector<std::string> pred = {"a", "c", "c", "a"};
  EXPECT_DOUBLE_EQ(intent_accuracy(gold, pred), 75.0);
  EXPECT_DOUBLE_EQ(intent_accuracy(gold, gold), 100.0);
  EXPECT_THROW(intent_accuracy(gold, std::vector<std::string>{"a"}), EvalError);
}

TEST(TprFdr, WorkedExample) {
  // Gold targets a and b; a is found, b is missed, c is a false alarm.
  const std::vector<std::string> gold = {"Target", "Target", "Other"};
  const std::vector<std::string> pred = {"Target", "Other", "Target"};
  const TargetRates r = tpr_fdr(gold, pred, "Target");
  EXPECT_DOUBLE_EQ(r.tpr, 50.0);
  EXPECT_DOUBLE_EQ(r.fdr, 50.0);
  EXPECT_EQ(r.target_gold, 2u);
  EXPECT_EQ(r.target_predicted, 2u);
  EXPECT_EQ(r.true_positives, 1u);
  EXPECT_FALSE(r.undefined);
}

TEST(TprFdr, EdgeCases) {
  const std::vector<std::string> gold = {"x", "y"};
  const std::vector<std::string> perfect = {"x", "y"};
  const TargetRates p = tpr_fdr(gold, perfect, "x");
  EXPECT_DOUBLE_EQ(p.tpr, 100.0);
  EXPECT_DOUBLE_EQ(p.fdr, 0.0);
  const TargetRates absent = tpr_fdr(gold, perfect, "z");
  EXPECT_TRUE(absent.undefined);
}

TEST(Evaluate, ReportAndConllDump) {
  const std::vector<LabeledUtterance> gold = {{{"play", "jazz"}, "PlayMusic", {"O", "B-genre"}},
                                              {{"rain", "today"}, "GetWeather", {"O", "B-time"}}};
  std::vector<LabeledUtterance> pred = gold;
  pred[1].intent = "PlayMusic";
  pred[1].bio = {"O", "O"};
  const EvalReport r = evaluate(gold, pred, "GetWeather");
  EXPECT_DOUBLE_EQ(r.intent_accuracy, 50.0);
  EXPECT_EQ(r.slots.counts.true_positives, 1u);
  EXPECT_EQ(r.slots.counts.false_negatives, 1u);
  EXPECT_DOUBLE_EQ(r.target.tpr, 0.0);
  EXPECT_EQ(r.utterances, 2u);
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("intent_accuracy"));
  EXPECT_TRUE(j.contains("slot_f1"));
  std::ostringstream out;
  write_conll(out, gold, pred);
  EXPECT_EQ(out.str(), "play O O\njazz B-genre B-genre\n\nrain O O\ntoday B-time O\n\n");

  pred[0].tokens = {"play", "blues"};
  EXPECT_THROW(evaluate(gold, pred, "GetWeather"), EvalError);
}
