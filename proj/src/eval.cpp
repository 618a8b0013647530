#include "zsnlu/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "zsnlu/corpus.hpp"

namespace zsnlu {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

SpanScores conll_span_f1(std::span<const std::vector<std::string>> gold,
                         std::span<const std::vector<std::string>> pred) {
  if (gold.size() != pred.size()) {
    throw EvalError("gold has " + std::to_string(gold.size()) + " sequences, predictions " +
                    std::to_string(pred.size()));
  }
  SpanScores s;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    if (gold[u].size() != pred[u].size()) {
      throw EvalError("sequence " + std::to_string(u) + " differs in length");
    }
    const auto g = bio_to_spans(gold[u], BioMode::kRepair);
    const auto p = bio_to_spans(pred[u], BioMode::kRepair);
    const std::set<Span> gold_set(g.begin(), g.end());
    std::size_t hits = 0;
    for (const auto& span : p) hits += gold_set.count(span);
    s.counts.true_positives += hits;
    s.counts.false_positives += p.size() - hits;
    s.counts.false_negatives += g.size() - hits;
  }
  const auto& c = s.counts;
  s.precision = percent(c.true_positives, c.true_positives + c.false_positives);
  s.recall = percent(c.true_positives, c.true_positives + c.false_negatives);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.size() != pred.size()) throw EvalError("intent lists differ in length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i];
  return percent(hits, gold.size());
}

TargetRates tpr_fdr(std::span<const std::string> gold, std::span<const std::string> pred,
                    const std::string& target) {
  if (gold.size() != pred.size()) throw EvalError("intent lists differ in length");
  TargetRates r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == target;
    const bool p = pred[i] == target;
    r.target_gold += g;
    r.target_predicted += p;
    r.true_positives += g && p;
  }
  r.tpr = percent(r.true_positives, r.target_gold);
  r.fdr = percent(r.target_predicted - r.true_positives, r.target_predicted);
  r.undefined = r.target_gold == 0 && r.target_predicted == 0;
  return r;
}

EvalReport evaluate(std::span<const LabeledUtterance> gold, std::span<const LabeledUtterance> pred,
                    const std::string& target_intent) {
  if (gold.size() != pred.size()) {
    throw EvalError("gold has " + std::to_string(gold.size()) + " utterances, predictions " +
                    std::to_string(pred.size()));
  }
  std::vector<std::string> gi, pi;
  std::vector<std::vector<std::string>> gb, pb;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tokens != pred[i].tokens) {
      throw EvalError("utterance " + std::to_string(i) + " tokens differ between gold and predictions");
    }
    gi.push_back(gold[i].intent);
    pi.push_back(pred[i].intent);
    gb.push_back(gold[i].bio);
    pb.push_back(pred[i].bio);
  }
  EvalReport r;
  r.utterances = gold.size();
  r.intent_accuracy = intent_accuracy(gi, pi);
  r.slots = conll_span_f1(gb, pb);
  r.target_intent = target_intent;
  if (!target_intent.empty()) r.target = tpr_fdr(gi, pi, target_intent);
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {
      {"utterances", utterances},
      {"intent_accuracy", intent_accuracy},
      {"slot_precision", slots.precision},
      {"slot_recall", slots.recall},
      {"slot_f1", slots.f1},
      {"span_counts",
       {{"tp", slots.counts.true_positives}, {"fp", slots.counts.false_positives},
        {"fn", slots.counts.false_negatives}}},
  };
  if (!target_intent.empty()) {
    j["target_intent"] = target_intent;
    j["tpr"] = target.tpr;
    j["fdr"] = target.fdr;
    j["target_counts"] = {{"gold", target.target_gold},
                          {"predicted", target.target_predicted},
                          {"true_positives", target.true_positives},
                          {"undefined", target.undefined}};
  }
  return j;
}

std::string EvalReport::summary() const {
  char buf[160];
  if (target_intent.empty()) {
    std::snprintf(buf, sizeof buf, "intent_acc=%.2f slot_f1=%.2f", intent_accuracy, slots.f1);
  } else {
    std::snprintf(buf, sizeof buf, "intent_acc=%.2f slot_f1=%.2f tpr=%.2f fdr=%.2f", intent_accuracy,
                  slots.f1, target.tpr, target.fdr);
  }
  return buf;
}

void write_conll(std::ostream& out, std::span<const LabeledUtterance> gold,
                 std::span<const LabeledUtterance> pred) {
  if (gold.size() != pred.size()) throw EvalError("gold and predictions differ in length");
  for (std::size_t u = 0; u < gold.size(); ++u) {
    for (std::size_t i = 0; i < gold[u].tokens.size(); ++i) {
      out << gold[u].tokens[i] << ' ' << gold[u].bio[i] << ' ' << pred[u].bio.at(i) << '\n';
    }
    out << '\n';
  }
}

}  // namespace zsnlu
