#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsnlu/checkpoint.hpp"
#include "zsnlu/corpus.hpp"
#include "zsnlu/encoder.hpp"
#include "zsnlu/model.hpp"
#include "zsnlu/pipeline.hpp"

namespace zsnlu {

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 5e-3;
  double warmup_ratio = 0.1;
  std::size_t max_epochs = 20;
  std::size_t batch_size = 16;  // training pairs per update
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  IntentHead intent_head = IntentHead::kWordLevel;
  bool use_gamma = true;
  bool joint = true;
  std::string target_intent;
  std::size_t dim = 16;
  std::size_t hidden = 0;
  double validation_fraction = 0.1;

  // Throws std::invalid_argument on out-of-range fields or an unknown target.
  void validate(const Ontology& ontology) const;
  ModelConfig model_config(std::size_t dim_enc, const Ontology& ontology) const;
  nlohmann::json to_json() const;
};

enum class Stage { kA, kB };

std::string_view stage_name(Stage s);
// Stage A trains translation + rest with the adapter frozen; stage B trains
// adapter + rest with translation frozen.
void apply_stage_freeze(ParamStore& params, Stage stage);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> log);

struct StageRun {
  Checkpoint best;  // lowest validation loss
  Checkpoint last;  // carries optimizer state for resuming
  std::vector<EpochMetrics> log;
};

struct TrainingData {
  std::span<const Utterance> train;
  std::span<const Utterance> validation;
  const EmbeddingStore* store = nullptr;
  const Ontology* ontology = nullptr;
};

// Runs epochs until config.max_epochs (or `stop_after` epochs in total when
// non-zero). `start` is a fresh model for stage A, the stage-A best
// checkpoint for stage B, or a previous StageRun to resume.
StageRun train_stage(Stage stage, const TrainConfig& config, const Checkpoint& start,
                     const TrainingData& data, std::uint64_t seed, std::size_t stop_after = 0);
StageRun resume_stage(Stage stage, const TrainConfig& config, const StageRun& previous,
                      const TrainingData& data, std::uint64_t seed, std::size_t stop_after = 0);

// Reassembles a saved run (the log travels inside the last checkpoint).
StageRun stage_run_from(Checkpoint best, Checkpoint last);

// Unweighted slot cross-entropy (+ intent BCE for joint models) averaged over
// pairs drawn with a fixed seed.
double validation_loss(const JointModel& model, std::span<const Utterance> data,
                       const EmbeddingStore& store, const Ontology& ontology, std::uint64_t seed);

struct PreparedData {
  std::vector<Utterance> train;
  std::vector<Utterance> validation;
  Ontology seen;  // ontology without the target intent
  TrainingData view(const EmbeddingStore& store) const { return {train, validation, &store, &seen}; }
};

// Drops config.target_intent (utterances and ontology entry) and holds out
// the seeded validation split.
PreparedData prepare_training(const TrainConfig& config, std::span<const Utterance> train_pool,
                              const Ontology& ontology, std::uint64_t seed);

// Fresh model for `seed`; gamma is sized from the full ontology.
JointModel initial_model(const TrainConfig& config, std::size_t dim_enc, const Ontology& ontology,
                         std::uint64_t seed);

struct TwoStageRun {
  StageRun stage_a;
  std::optional<StageRun> stage_b;
  const Checkpoint& final_checkpoint() const { return stage_b ? stage_b->best : stage_a.best; }
};

// prepare_training, then stage A (and stage B from the best stage-A
// checkpoint when two_stage).
TwoStageRun train_model(const TrainConfig& config, std::span<const Utterance> train_pool,
                        const EmbeddingStore& store, const Ontology& ontology, std::uint64_t seed,
                        bool two_stage);

struct SeedResult {
  std::uint64_t seed = 0;
  EvalReport report;
  std::vector<EpochMetrics> log_a;
  std::vector<EpochMetrics> log_b;
};

struct TargetResult {
  std::string target;
  std::vector<SeedResult> per_seed;
  EvalReport mean;  // metric fields averaged over seeds
};

// Caps worker threads: ZSNLU_THREADS if set and positive, else hardware.
std::size_t worker_threads();

// Leave-one-intent-out: per target and seed, split, two-stage train, decode
// the whole test pool. Independent runs fan out over worker threads.
std::vector<TargetResult> run_loio_experiment(const TrainConfig& config, const DecodeOptions& decode,
                                              std::span<const Utterance> train_pool,
                                              std::span<const Utterance> test_pool,
                                              const EmbeddingStore& store, const Ontology& ontology,
                                              std::span<const std::string> targets);

nlohmann::json loio_report_json(std::span<const TargetResult> results);

struct SweepPoint {
  double learning_rate = 0.0;
  std::vector<EvalReport> per_seed;  // on the validation split
  double mean_val_loss = 0.0;
};

// Learning-rate grid for one target, scored on the held-out validation split.
std::vector<SweepPoint> sweep_learning_rates(const TrainConfig& config, const DecodeOptions& decode,
                                             std::span<const double> grid,
                                             std::span<const Utterance> train_pool,
                                             const EmbeddingStore& store, const Ontology& ontology);

nlohmann::json sweep_report_json(std::span<const SweepPoint> points);

// Runs fn(0..count-1) on up to worker_threads() threads; rethrows the first
// failure by index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace zsnlu
