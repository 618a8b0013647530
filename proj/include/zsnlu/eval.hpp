#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace zsnlu {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SpanCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

struct SpanScores {
  SpanCounts counts;
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
};

// Exact-match chunk scoring with conlleval's chunk rules (an I- that does
// not continue a same-type chunk opens a new one).
SpanScores conll_span_f1(std::span<const std::vector<std::string>> gold,
                         std::span<const std::vector<std::string>> pred);

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> pred);

struct TargetRates {
  double tpr = 0.0;  // percent of target-gold utterances predicted as target
  double fdr = 0.0;  // percent of target predictions whose gold differs
  std::size_t target_gold = 0;
  std::size_t target_predicted = 0;
  std::size_t true_positives = 0;
  bool undefined = false;  // target neither gold nor predicted anywhere
};

TargetRates tpr_fdr(std::span<const std::string> gold, std::span<const std::string> pred,
                    const std::string& target);

struct EvalReport {
  double intent_accuracy = 0.0;
  SpanScores slots;
  TargetRates target;
  std::string target_intent;
  std::size_t utterances = 0;

  nlohmann::json to_json() const;
  std::string summary() const;
};

struct LabeledUtterance {
  std::vector<std::string> tokens;
  std::string intent;
  std::vector<std::string> bio;
};

EvalReport evaluate(std::span<const LabeledUtterance> gold, std::span<const LabeledUtterance> pred,
                    const std::string& target_intent);

// "token gold pred" per line, blank line between utterances.
void write_conll(std::ostream& out, std::span<const LabeledUtterance> gold,
                 std::span<const LabeledUtterance> pred);

}  // namespace zsnlu
