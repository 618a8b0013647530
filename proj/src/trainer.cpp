#include "zsnlu/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>

#include "zsnlu/optimizer.hpp"

namespace zsnlu {

namespace {

// Independent stream per (seed, purpose, index).
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

enum Purpose : std::uint32_t {
  kInitStream = 1,
  kHoldoutStream = 2,
  kEpochStreamA = 3,
  kEpochStreamB = 4,
  kValidationStream = 5,
};

std::uint64_t draw_seed(std::uint64_t seed, Purpose purpose) { return stream(seed, purpose, 0)(); }

nlohmann::json log_to_json(std::span<const EpochMetrics> log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : log) arr.push_back({m.epoch, m.train_loss, m.val_loss, m.learning_rate});
  return arr;
}

std::vector<EpochMetrics> log_from_json(const nlohmann::json& arr) {
  std::vector<EpochMetrics> log;
  for (const auto& row : arr) {
    log.push_back({row.at(0).get<std::size_t>(), row.at(1).get<double>(), row.at(2).get<double>(),
                   row.at(3).get<double>()});
  }
  return log;
}

std::size_t total_steps(const TrainConfig& config, std::size_t utterances) {
  const std::size_t pairs = 4 * utterances;
  return config.max_epochs * std::max<std::size_t>(1, (pairs + config.batch_size - 1) / config.batch_size);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate(const Ontology& ontology) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0) throw std::invalid_argument("warmup ratio must be in [0, 1]");
  if (max_epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (dim < 1) throw std::invalid_argument("dim must be positive");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("validation fraction must be in [0, 1)");
  }
  if (!target_intent.empty() && !ontology.has_intent(target_intent)) {
    throw std::invalid_argument("target intent '" + target_intent + "' is not in the ontology");
  }
}

ModelConfig TrainConfig::model_config(std::size_t dim_enc, const Ontology& ontology) const {
  ModelConfig m;
  m.dim_enc = dim_enc;
  m.dim = dim;
  m.hidden = hidden;
  m.l_max = ontology.max_slots_per_intent();
  m.intent_head = intent_head;
  m.use_gamma = use_gamma;
  m.joint = joint;
  return m;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"warmup_ratio", warmup_ratio},
          {"max_epochs", max_epochs},       {"batch_size", batch_size},
          {"seeds", seeds},                 {"intent_head", intent_head_name(intent_head)},
          {"gamma", use_gamma},             {"joint", joint},
          {"target_intent", target_intent}, {"dim", dim},
          {"hidden", hidden},               {"validation_fraction", validation_fraction}};
}

std::string_view stage_name(Stage s) { return s == Stage::kA ? "A" : "B"; }

void apply_stage_freeze(ParamStore& params, Stage stage) {
  params.set_frozen(ParamGroup::kTranslation, stage == Stage::kB);
  params.set_frozen(ParamGroup::kAdapter, stage == Stage::kA);
  params.set_frozen(ParamGroup::kRest, false);
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> log) {
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& m : log) {
    out << m.epoch << ',' << fmt_double(m.train_loss) << ',' << fmt_double(m.val_loss) << ','
        << fmt_double(m.learning_rate) << '\n';
  }
}

double validation_loss(const JointModel& model, std::span<const Utterance> data,
                       const EmbeddingStore& store, const Ontology& ontology, std::uint64_t seed) {
  auto rng = stream(seed, kValidationStream, 0);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& u : data) {
    for (const auto& pair : sample_quadrants(u, ontology, rng)) {
      const PairInputs in = resolve_inputs(store, ontology, u, pair.intent, pair.slot);
      Graph g;
      const BoundParams p = model.bind_constant(g);
      const JointVars out = forward_joint(g, p, model.config(), in);
      double loss = g.value(g.cross_entropy_rows(out.slot_probs, pair.bio_targets)).item();
      if (model.config().joint) {
        loss += g.value(g.binary_cross_entropy(out.intent_prob, pair.intent_present ? 1.0 : 0.0)).item();
      }
      total += loss;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

namespace {

struct StageState {
  JointModel model;
  AdamOptimizer optimizer;
  std::size_t epochs_completed = 0;
  std::vector<EpochMetrics> log;
  Checkpoint best;
  double best_val = 0.0;
  bool has_best = false;
};

StageRun run_epochs(Stage stage, const TrainConfig& config, StageState& s, const TrainingData& data,
                    std::uint64_t seed, std::size_t stop_after) {
  const Ontology& ontology = *data.ontology;
  const EmbeddingStore& store = *data.store;
  const std::size_t end_epoch =
      stop_after == 0 ? config.max_epochs : std::min(config.max_epochs, stop_after);
  const Purpose purpose = stage == Stage::kA ? kEpochStreamA : kEpochStreamB;

  for (std::size_t epoch = s.epochs_completed + 1; epoch <= end_epoch; ++epoch) {
    auto rng = stream(seed, purpose, epoch);
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<TrainingPair> pairs;
    for (std::size_t idx : order) {
      auto drawn = sample_quadrants(data.train[idx], ontology, rng);
      pairs.insert(pairs.end(), std::make_move_iterator(drawn.begin()), std::make_move_iterator(drawn.end()));
    }

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < pairs.size(); begin += config.batch_size) {
      const std::size_t end = std::min(pairs.size(), begin + config.batch_size);
      s.model.params().zero_grad();
      Graph g;
      const BoundParams p = s.model.bind(g);
      std::vector<Var> losses;
      for (std::size_t i = begin; i < end; ++i) {
        const TrainingPair& pair = pairs[i];
        const PairInputs in = resolve_inputs(store, ontology, *pair.utterance, pair.intent, pair.slot);
        const JointVars out = forward_joint(g, p, s.model.config(), in);
        losses.push_back(joint_loss(g, p, s.model.config(), out, pair.bio_targets, pair.intent_present));
      }
      const Var batch_loss =
          g.scale(g.sum(g.concat_rows(losses)), 1.0 / static_cast<double>(losses.size()));
      const double value = g.value(batch_loss).item();
      if (!std::isfinite(value)) {
        throw NonFiniteLossError("non-finite loss in stage " + std::string(stage_name(stage)) + " epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(begin / config.batch_size) +
                                 " (first utterance: \"" + pairs[begin].utterance->text + "\", lr " +
                                 fmt_double(s.optimizer.current_learning_rate()) + ")");
      }
      g.backward(batch_loss);
      for (const auto& param : s.model.params().all()) {
        if (s.model.params().trainable(param) && !param.grad.all_finite()) {
          throw NonFiniteLossError("non-finite gradient for " + param.name + " in epoch " +
                                   std::to_string(epoch));
        }
      }
      s.optimizer.step(s.model.params());
      epoch_loss += value * static_cast<double>(end - begin);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = pairs.empty() ? 0.0 : epoch_loss / static_cast<double>(pairs.size());
    m.val_loss = data.validation.empty() ? m.train_loss
                                         : validation_loss(s.model, data.validation, store, ontology, seed);
    m.learning_rate = s.optimizer.current_learning_rate();
    s.log.push_back(m);
    s.epochs_completed = epoch;

    if (!s.has_best || m.val_loss < s.best_val) {
      s.has_best = true;
      s.best_val = m.val_loss;
      s.best = make_checkpoint(s.model);
      s.best.epochs_completed = epoch;
      s.best.info = {{"stage", stage_name(stage)}, {"seed", seed}, {"val_loss", m.val_loss}};
    }
  }

  StageRun run;
  run.best = s.best;
  run.log = s.log;
  run.last = make_checkpoint(s.model);
  run.last.epochs_completed = s.epochs_completed;
  run.last.info = {{"stage", stage_name(stage)}, {"seed", seed}, {"log", log_to_json(s.log)}};
  OptimizerSnapshot snap;
  snap.config = s.optimizer.config();
  snap.step = s.optimizer.steps_taken();
  snap.first_moments = s.optimizer.first_moments();
  snap.second_moments = s.optimizer.second_moments();
  run.last.optimizer = std::move(snap);
  return run;
}

AdamConfig adam_config(const TrainConfig& config, const TrainingData& data) {
  AdamConfig a;
  a.learning_rate = config.learning_rate;
  a.warmup_ratio = config.warmup_ratio;
  a.total_steps = total_steps(config, data.train.size());
  return a;
}

void check_data(const TrainingData& data) {
  if (data.store == nullptr || data.ontology == nullptr) throw std::invalid_argument("training data incomplete");
  if (data.train.empty()) throw std::invalid_argument("training set is empty");
}

}  // namespace

StageRun train_stage(Stage stage, const TrainConfig& config, const Checkpoint& start,
                     const TrainingData& data, std::uint64_t seed, std::size_t stop_after) {
  check_data(data);
  if (stage == Stage::kB && start.info.value("stage", std::string()) != "A") {
    throw std::invalid_argument("stage B must start from a stage-A checkpoint");
  }
  JointModel model = model_from_checkpoint(start);
  apply_stage_freeze(model.params(), stage);
  AdamOptimizer optimizer(adam_config(config, data), model.params());
  StageState s{std::move(model), std::move(optimizer), 0, {}, {}, 0.0, false};
  return run_epochs(stage, config, s, data, seed, stop_after);
}

StageRun resume_stage(Stage stage, const TrainConfig& config, const StageRun& previous,
                      const TrainingData& data, std::uint64_t seed, std::size_t stop_after) {
  check_data(data);
  const Checkpoint& last = previous.last;
  if (!last.optimizer) throw std::invalid_argument("checkpoint has no optimizer state to resume from");
  if (last.info.value("stage", std::string()) != stage_name(stage)) {
    throw std::invalid_argument("resume checkpoint belongs to another stage");
  }
  JointModel model = model_from_checkpoint(last);
  apply_stage_freeze(model.params(), stage);
  AdamOptimizer optimizer(last.optimizer->config, model.params());
  optimizer.restore(last.optimizer->step, last.optimizer->first_moments, last.optimizer->second_moments);
  StageState s{std::move(model), std::move(optimizer), 0, {}, {}, 0.0, false};
  s.epochs_completed = last.epochs_completed;
  s.log = previous.log;
  s.best = previous.best;
  s.has_best = true;
  s.best_val = previous.best.info.at("val_loss").get<double>();
  return run_epochs(stage, config, s, data, seed, stop_after);
}

StageRun stage_run_from(Checkpoint best, Checkpoint last) {
  StageRun run;
  run.log = log_from_json(last.info.at("log"));
  run.best = std::move(best);
  run.last = std::move(last);
  return run;
}

PreparedData prepare_training(const TrainConfig& config, std::span<const Utterance> train_pool,
                              const Ontology& ontology, std::uint64_t seed) {
  config.validate(ontology);
  PreparedData d;
  // Zero-shot: the target intent is invisible to training, even as a negative.
  std::vector<Utterance> pool;
  for (const auto& u : train_pool) {
    if (u.intent != config.target_intent) pool.push_back(u);
  }
  d.seen = config.target_intent.empty() ? ontology : ontology.without_intent(config.target_intent);
  std::tie(d.train, d.validation) =
      holdout_validation(pool, config.validation_fraction, draw_seed(seed, kHoldoutStream));
  return d;
}

JointModel initial_model(const TrainConfig& config, std::size_t dim_enc, const Ontology& ontology,
                         std::uint64_t seed) {
  return JointModel(config.model_config(dim_enc, ontology), draw_seed(seed, kInitStream));
}

TwoStageRun train_model(const TrainConfig& config, std::span<const Utterance> train_pool,
                        const EmbeddingStore& store, const Ontology& ontology, std::uint64_t seed,
                        bool two_stage) {
  const PreparedData prepared = prepare_training(config, train_pool, ontology, seed);
  const TrainingData data = prepared.view(store);
  TwoStageRun run;
  run.stage_a = train_stage(Stage::kA, config, make_checkpoint(initial_model(config, store.dim(), ontology, seed)),
                            data, seed);
  if (two_stage) run.stage_b = train_stage(Stage::kB, config, run.stage_a.best, data, seed);
  return run;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("ZSNLU_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min(worker_threads(), count);
  std::vector<std::exception_ptr> errors(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(mu);
            if (next >= count) return;
            i = next++;
          }
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

EvalReport mean_report(std::span<const SeedResult> runs, const std::string& target) {
  EvalReport mean;
  mean.target_intent = target;
  if (runs.empty()) return mean;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    mean.intent_accuracy += r.report.intent_accuracy / n;
    mean.slots.precision += r.report.slots.precision / n;
    mean.slots.recall += r.report.slots.recall / n;
    mean.slots.f1 += r.report.slots.f1 / n;
    mean.target.tpr += r.report.target.tpr / n;
    mean.target.fdr += r.report.target.fdr / n;
  }
  mean.utterances = runs.front().report.utterances;
  return mean;
}

}  // namespace

std::vector<TargetResult> run_loio_experiment(const TrainConfig& config, const DecodeOptions& decode,
                                              std::span<const Utterance> train_pool,
                                              std::span<const Utterance> test_pool,
                                              const EmbeddingStore& store, const Ontology& ontology,
                                              std::span<const std::string> targets) {
  if (ontology.intents().size() < 2) throw std::invalid_argument("leave-one-intent-out needs two intents");
  std::vector<LoioSplit> splits;
  for (const auto& t : targets) {
    if (!ontology.has_intent(t)) throw std::invalid_argument("unknown target intent '" + t + "'");
    splits.push_back(split_leave_one_intent_out(train_pool, test_pool, t));
  }
  const std::size_t n_seeds = config.seeds.size();
  std::vector<SeedResult> flat(targets.size() * n_seeds);
  parallel_for(flat.size(), [&](std::size_t job) {
    const std::size_t t = job / n_seeds;
    const std::uint64_t seed = config.seeds[job % n_seeds];
    TrainConfig c = config;
    c.target_intent = targets[t];
    const TwoStageRun run = train_model(c, splits[t].train, store, ontology, seed, true);
    const JointModel model = model_from_checkpoint(run.final_checkpoint());
    const auto preds = predict_dataset(model, store, ontology, splits[t].test, decode);
    SeedResult r;
    r.seed = seed;
    r.report = evaluate(as_labeled(splits[t].test), as_labeled(preds), targets[t]);
    r.log_a = run.stage_a.log;
    r.log_b = run.stage_b->log;
    flat[job] = std::move(r);
  });

  std::vector<TargetResult> results;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    TargetResult tr;
    tr.target = targets[t];
    tr.per_seed.assign(flat.begin() + static_cast<std::ptrdiff_t>(t * n_seeds),
                       flat.begin() + static_cast<std::ptrdiff_t>((t + 1) * n_seeds));
    tr.mean = mean_report(tr.per_seed, tr.target);
    results.push_back(std::move(tr));
  }
  return results;
}

nlohmann::json loio_report_json(std::span<const TargetResult> results) {
  nlohmann::json report = nlohmann::json::object();
  for (const auto& r : results) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& s : r.per_seed) {
      nlohmann::json j = s.report.to_json();
      j["seed"] = s.seed;
      per_seed.push_back(std::move(j));
    }
    report[r.target] = {{"intent_accuracy", r.mean.intent_accuracy},
                        {"slot_f1", r.mean.slots.f1},
                        {"tpr", r.mean.target.tpr},
                        {"fdr", r.mean.target.fdr},
                        {"per_seed", std::move(per_seed)}};
  }
  return report;
}

std::vector<SweepPoint> sweep_learning_rates(const TrainConfig& config, const DecodeOptions& decode,
                                             std::span<const double> grid,
                                             std::span<const Utterance> train_pool,
                                             const EmbeddingStore& store, const Ontology& ontology) {
  if (config.target_intent.empty()) throw std::invalid_argument("sweep needs a target intent");
  const LoioSplit split = split_leave_one_intent_out(train_pool, {}, config.target_intent);
  const std::size_t n_seeds = config.seeds.size();
  std::vector<EvalReport> reports(grid.size() * n_seeds);
  std::vector<double> losses(reports.size());
  parallel_for(reports.size(), [&](std::size_t job) {
    TrainConfig c = config;
    c.learning_rate = grid[job / n_seeds];
    const std::uint64_t seed = config.seeds[job % n_seeds];
    c.validate(ontology);
    const TwoStageRun run = train_model(c, split.train, store, ontology, seed, true);
    const JointModel model = model_from_checkpoint(run.final_checkpoint());
    const PreparedData prepared = prepare_training(c, split.train, ontology, seed);
    const auto preds = predict_dataset(model, store, ontology, prepared.validation, decode);
    reports[job] = evaluate(as_labeled(prepared.validation), as_labeled(preds), "");
    losses[job] = run.stage_b->best.info.at("val_loss").get<double>();
  });
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepPoint p;
    p.learning_rate = grid[i];
    for (std::size_t s = 0; s < n_seeds; ++s) {
      p.per_seed.push_back(reports[i * n_seeds + s]);
      p.mean_val_loss += losses[i * n_seeds + s] / static_cast<double>(n_seeds);
    }
    points.push_back(std::move(p));
  }
  return points;
}

nlohmann::json sweep_report_json(std::span<const SweepPoint> points) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : points) {
    double acc = 0.0, f1 = 0.0;
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& r : p.per_seed) {
      acc += r.intent_accuracy / static_cast<double>(p.per_seed.size());
      f1 += r.slots.f1 / static_cast<double>(p.per_seed.size());
      per_seed.push_back(r.to_json());
    }
    arr.push_back({{"learning_rate", p.learning_rate},
                   {"val_loss", p.mean_val_loss},
                   {"val_intent_accuracy", acc},
                   {"val_slot_f1", f1},
                   {"per_seed", std::move(per_seed)}});
  }
  return arr;
}

}  // namespace zsnlu
