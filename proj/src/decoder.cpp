#include "zsnlu/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace zsnlu {

LabelSpace::LabelSpace(std::vector<std::string> slots) : slots_(std::move(slots)) {
  std::sort(slots_.begin(), slots_.end());
}

std::optional<std::size_t> LabelSpace::slot_index(std::string_view slot) const {
  auto it = std::lower_bound(slots_.begin(), slots_.end(), slot);
  if (it == slots_.end() || *it != slot) return std::nullopt;
  return static_cast<std::size_t>(it - slots_.begin());
}

std::string LabelSpace::label(std::size_t col) const {
  if (col == outside()) return "O";
  return (is_begin(col) ? "B-" : "I-") + slots_.at(slot_of(col));
}

std::size_t LabelSpace::column(std::string_view label) const {
  const BioTag tag = BioTag::parse(label);
  if (tag.kind == kOutside) return outside();
  const auto s = slot_index(tag.slot);
  if (!s) throw DecodeError("label " + std::string(label) + " is not in the label space");
  return tag.kind == kBegin ? begin_of(*s) : inside_of(*s);
}

LegalityTable::LegalityTable(const LabelSpace& labels, const Ontology& ontology, std::string_view intent)
    : labels_(&labels), slot_allowed_(labels.slot_count(), false) {
  for (const auto& s : ontology.intent(intent).slots) {
    if (auto idx = labels.slot_index(s)) slot_allowed_[*idx] = true;
  }
}

bool LegalityTable::allows(std::optional<std::size_t> prev, std::size_t next) const {
  if (next == labels_->outside()) return true;
  if (!slot_allowed_[labels_->slot_of(next)]) return false;
  if (labels_->is_begin(next)) return true;
  return prev && *prev != labels_->outside() && labels_->slot_of(*prev) == labels_->slot_of(next);
}

bool is_legal_transition(const LabelSpace& labels, std::optional<std::size_t> prev, std::size_t next,
                         std::string_view intent, const Ontology& ontology) {
  return LegalityTable(labels, ontology, intent).allows(prev, next);
}

std::map<std::string, Tensor> average_slot_probs(const UtteranceScores& scores, const Ontology& ontology) {
  std::map<std::string, Tensor> out;
  for (const auto& slot : ontology.slot_names()) {
    const auto hosts = ontology.intents_with_slot(slot);
    if (hosts.empty()) continue;
    Tensor mean(scores.length, kNumBioClasses);
    for (const auto& intent : hosts) {
      auto it = scores.slot_probs.find({intent, slot});
      if (it == scores.slot_probs.end()) {
        throw DecodeError("missing model run for intent " + intent + " / slot " + slot);
      }
      if (it->second.rows() != scores.length || it->second.cols() != kNumBioClasses) {
        throw DecodeError("run for " + intent + " / " + slot + " has shape " + it->second.shape_string());
      }
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += it->second[i];
    }
    const double inv = 1.0 / static_cast<double>(hosts.size());
    for (double& v : mean.values()) v *= inv;
    out.emplace(slot, std::move(mean));
  }
  return out;
}

BeamMatrix build_beam_matrix(const UtteranceScores& scores, const Ontology& ontology, double epsilon) {
  BeamMatrix m{LabelSpace(ontology.slot_names()), Tensor(), epsilon};
  const auto averaged = average_slot_probs(scores, ontology);
  const std::size_t cols = m.labels.size();
  m.probs = Tensor(scores.length, cols);
  for (std::size_t s = 0; s < m.labels.slot_count(); ++s) {
    auto it = averaged.find(m.labels.slots()[s]);
    for (std::size_t i = 0; i < scores.length; ++i) {
      const double b = it == averaged.end() ? 0.0 : it->second(i, kBegin);
      const double in = it == averaged.end() ? 0.0 : it->second(i, kInside);
      m.probs(i, m.labels.begin_of(s)) = std::clamp(b, epsilon, 1.0);
      m.probs(i, m.labels.inside_of(s)) = std::clamp(in, epsilon, 1.0);
    }
  }
  for (std::size_t i = 0; i < scores.length; ++i) {
    double total = 0.0;
    for (std::size_t c = 0; c < m.labels.outside(); ++c) total += m.probs(i, c);
    m.probs(i, m.labels.outside()) = std::max(epsilon, 1.0 - total);
  }
  return m;
}

bool path_better(const DecodedPath& a, const DecodedPath& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.intent != b.intent) return a.intent < b.intent;
  return a.columns < b.columns;
}

std::vector<std::string> columns_to_bio(const LabelSpace& labels, std::span<const std::size_t> columns) {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (std::size_t c : columns) out.push_back(labels.label(c));
  return out;
}

namespace {

void keep_best(std::vector<DecodedPath>& beam, std::size_t width) {
  std::sort(beam.begin(), beam.end(), path_better);
  if (beam.size() > width) beam.resize(width);
}

std::vector<DecodedPath> extend(const std::vector<DecodedPath>& beam, const BeamMatrix& m, std::size_t t,
                                const std::map<std::string, LegalityTable>& legality) {
  std::vector<DecodedPath> next;
  for (const auto& path : beam) {
    const LegalityTable& table = legality.at(path.intent);
    const std::optional<std::size_t> prev =
        path.columns.empty() ? std::nullopt : std::optional<std::size_t>(path.columns.back());
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
      if (!table.allows(prev, c)) continue;
      DecodedPath p = path;
      p.columns.push_back(c);
      p.score += std::log(m.probs(t, c));
      next.push_back(std::move(p));
    }
  }
  return next;
}

}  // namespace

DecodedPath beam_search(const BeamMatrix& matrix, const std::map<std::string, double>& intent_probs,
                        const Ontology& ontology, const BeamOptions& options) {
  if (options.width == 0 || options.top_intents == 0) throw DecodeError("beam width must be positive");
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [intent, z] : intent_probs) {
    if (std::isfinite(z) && z > 0.0) ranked.emplace_back(intent, z);
  }
  if (ranked.empty()) throw DecodeError("no intent with a usable score");
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > options.top_intents) ranked.resize(options.top_intents);

  std::map<std::string, LegalityTable> legality;
  std::vector<std::vector<DecodedPath>> beams;
  for (const auto& [intent, z] : ranked) {
    legality.emplace(intent, LegalityTable(matrix.labels, ontology, intent));
    beams.push_back({DecodedPath{intent, {}, std::log(z)}});
  }
  if (!options.per_intent) {
    std::vector<DecodedPath> merged;
    for (auto& b : beams) merged.insert(merged.end(), b.begin(), b.end());
    beams = {std::move(merged)};
  }

  for (std::size_t t = 0; t < matrix.probs.rows(); ++t) {
    for (auto& beam : beams) {
      beam = extend(beam, matrix, t, legality);
      keep_best(beam, options.width);
    }
  }

  std::optional<DecodedPath> best;
  for (const auto& beam : beams) {
    for (const auto& p : beam) {
      if (!best || path_better(p, *best)) best = p;
    }
  }
  if (!best) throw DecodeError("beam search found no legal path");
  return *best;
}

std::vector<std::string> aggregate_independent(const std::map<std::string, Tensor>& per_slot_probs,
                                               std::size_t length) {
  struct Candidate {
    Span span;
    double begin_prob;
    std::size_t slot_rank;
  };
  std::vector<Candidate> candidates;
  std::size_t rank = 0;
  for (const auto& [slot, probs] : per_slot_probs) {
    if (probs.rows() != length) throw DecodeError("slot " + slot + " scores have the wrong length");
    std::vector<std::string> tags(length);
    for (std::size_t i = 0; i < length; ++i) {
      int best = kBegin;
      for (int c = kInside; c < kNumBioClasses; ++c) {
        if (probs(i, static_cast<std::size_t>(c)) > probs(i, static_cast<std::size_t>(best))) best = c;
      }
      tags[i] = best == kOutside ? "O" : BioTag{static_cast<BioClass>(best), slot}.str();
    }
    for (auto& span : bio_to_spans(tags, BioMode::kRepair)) {
      const double p = probs(span.start, kBegin);
      candidates.push_back({std::move(span), p, rank});
    }
    ++rank;
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.begin_prob, a.slot_rank, a.span.start) < std::tie(a.begin_prob, b.slot_rank, b.span.start);
  });
  std::vector<bool> taken(length, false);
  std::vector<Span> kept;
  for (const auto& c : candidates) {
    bool clash = false;
    for (std::size_t i = c.span.start; i <= c.span.end; ++i) clash = clash || taken[i];
    if (clash) continue;
    for (std::size_t i = c.span.start; i <= c.span.end; ++i) taken[i] = true;
    kept.push_back(c.span);
  }
  return spans_to_bio(kept, length);
}

}  // namespace zsnlu
