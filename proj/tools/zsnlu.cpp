// zsnlu: train, decode and evaluate the zero-shot joint NLU model.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zsnlu/checkpoint.hpp"
#include "zsnlu/corpus.hpp"
#include "zsnlu/encoder.hpp"
#include "zsnlu/eval.hpp"
#include "zsnlu/gradcheck.hpp"
#include "zsnlu/pipeline.hpp"
#include "zsnlu/synthetic.hpp"
#include "zsnlu/trainer.hpp"

namespace fs = std::filesystem;
using namespace zsnlu;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kRuntimeError = 2, kCheckFailed = 3 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Flat JSON config: {"lr": 0.001, "seed": [1, 2], "beam": true, ...}. Keys
// are long option names; each key is offered to every subcommand.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::vector<std::string> scopes) : scopes_(std::move(scopes)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConfigError("writing config files is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConfigError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      item.name = key;
      auto scalar = [](const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        return v.dump();
      };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      for (const auto& scope : scopes_) {
        item.parents = {scope};
        items.push_back(item);
      }
    }
    return items;
  }

 private:
  std::vector<std::string> scopes_;
};

struct Paths {
  std::string data;
  std::string test;
  std::string ontology;
  std::string emb;
  std::string ckpt_dir;
  std::string ckpt;
  std::string report;
  std::string out;
};

struct DecodeFlags {
  bool beam = false;
  std::size_t width = 3;
  std::size_t top_intents = 3;
  bool global_beam = false;
  double eps = kDefaultEpsilon;
  bool slot_only = false;

  DecodeOptions options() const {
    DecodeOptions d;
    d.mode = slot_only ? DecodeMode::kSlotOnly : beam ? DecodeMode::kBeam : DecodeMode::kIndependent;
    d.beam.width = width;
    d.beam.top_intents = top_intents;
    d.beam.per_intent = !global_beam;
    d.epsilon = eps;
    return d;
  }
};

struct TrainFlags {
  TrainConfig config;
  std::string intent_head = "wlevel";
  bool slot_only = false;
};

void add_data_options(CLI::App* sub, Paths& p, bool data = true) {
  if (data) sub->add_option("--data", p.data, "Dataset JSONL")->capture_default_str();
  sub->add_option("--ontology", p.ontology, "Ontology JSON")->capture_default_str();
  sub->add_option("--emb", p.emb, "ZSEMB1 embedding store")->capture_default_str();
}

void add_train_options(CLI::App* sub, TrainFlags& f) {
  auto& c = f.config;
  sub->add_option("--lr", c.learning_rate, "Base learning rate")->capture_default_str();
  sub->add_option("--warmup", c.warmup_ratio, "Warmup fraction of all updates")->capture_default_str();
  sub->add_option("--epochs", c.max_epochs, "Maximum epochs per stage")->capture_default_str();
  sub->add_option("--batch", c.batch_size, "Training pairs per update")->capture_default_str();
  sub->add_option("--seed", c.seeds, "Seeds, comma separated")->delimiter(',')->capture_default_str();
  sub->add_option("--intent-head", f.intent_head, "Intent head: wlevel or slevel")
      ->check(CLI::IsMember({"wlevel", "slevel"}))
      ->capture_default_str();
  sub->add_flag("--gamma,!--no-gamma", c.use_gamma, "Global slot constraint (on by default)");
  sub->add_flag("--slot-only", f.slot_only, "Drop the intent loss (slot-only model)")->capture_default_str();
  sub->add_option("--target", c.target_intent, "Held-out target intent")->capture_default_str();
  sub->add_option("--dim", c.dim, "Translated width")->capture_default_str();
  sub->add_option("--hidden", c.hidden, "biLSTM width per direction (0: same as --dim)")->capture_default_str();
  sub->add_option("--val-fraction", c.validation_fraction, "Validation holdout fraction")
      ->capture_default_str();
}

void add_decode_options(CLI::App* sub, DecodeFlags& d) {
  sub->add_flag("--beam,!--no-beam", d.beam, "Legality-constrained beam search")->capture_default_str();
  sub->add_option("--V", d.width, "Beam width")->capture_default_str();
  sub->add_option("--top-intents", d.top_intents, "Intents seeding the beam")->capture_default_str();
  sub->add_flag("--global-beam", d.global_beam, "One beam shared by all intents")->capture_default_str();
  sub->add_option("--eps", d.eps, "Probability floor of the beam matrix")->capture_default_str();
}

TrainConfig finish(const TrainFlags& f) {
  TrainConfig c = f.config;
  c.intent_head = parse_intent_head(f.intent_head);
  c.joint = !f.slot_only;
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

void require_file(const std::string& path, const char* flag) {
  require(path, flag);
  if (!fs::exists(path)) throw ConfigError(std::string(flag) + ": no such file " + path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_metrics(const fs::path& path, std::span<const EpochMetrics> log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  write_metrics_csv(out, log);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Paths paths;
  TrainFlags flags;
  bool two_stage = false;
  bool resume = false;
  std::size_t stop_after = 0;
};

int cmd_train(const TrainArgs& a) {
  require_file(a.paths.data, "--data");
  require_file(a.paths.ontology, "--ontology");
  require_file(a.paths.emb, "--emb");
  require(a.paths.ckpt_dir, "--ckpt-dir");
  const TrainConfig config = finish(a.flags);
  const Ontology ontology = Ontology::load(a.paths.ontology);
  config.validate(ontology);
  const auto data = load_dataset(a.paths.data, ontology);
  const EmbeddingStore store = EmbeddingStore::load(a.paths.emb);

  for (const std::uint64_t seed : config.seeds) {
    const fs::path dir = fs::path(a.paths.ckpt_dir) / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    const PreparedData prepared = prepare_training(config, data, ontology, seed);
    const TrainingData view = prepared.view(store);

    auto run_stage = [&](Stage stage, const Checkpoint& start) {
      const std::string name = stage == Stage::kA ? "stage_a" : "stage_b";
      const fs::path best = dir / (name + ".zsckpt");
      const fs::path last = dir / (name + ".last.zsckpt");
      StageRun run;
      if (a.resume && fs::exists(best) && fs::exists(last)) {
        run = resume_stage(stage, config,
                           stage_run_from(load_checkpoint(best.string()), load_checkpoint(last.string())), view,
                           seed, a.stop_after);
      } else {
        run = train_stage(stage, config, start, view, seed, a.stop_after);
      }
      save_checkpoint(run.best, best.string());
      save_checkpoint(run.last, last.string());
      write_metrics(dir / (name + ".metrics.csv"), run.log);
      const auto& m = run.log.back();
      std::printf("seed %llu stage %s: epoch %zu train_loss=%.6f val_loss=%.6f best_epoch=%zu\n",
                  static_cast<unsigned long long>(seed), std::string(stage_name(stage)).c_str(), m.epoch,
                  m.train_loss, m.val_loss, run.best.epochs_completed);
      return run;
    };

    const StageRun stage_a =
        run_stage(Stage::kA, make_checkpoint(initial_model(config, store.dim(), ontology, seed)));
    const bool a_complete = stage_a.last.epochs_completed >= config.max_epochs;
    if (a.two_stage && a_complete) run_stage(Stage::kB, stage_a.best);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  Paths paths;
  DecodeFlags decode;
};

int cmd_predict(const PredictArgs& a) {
  require_file(a.paths.ckpt, "--ckpt");
  require_file(a.paths.data, "--data");
  require_file(a.paths.ontology, "--ontology");
  require_file(a.paths.emb, "--emb");
  require(a.paths.out, "--out");
  const Ontology ontology = Ontology::load(a.paths.ontology);
  const auto data = load_dataset(a.paths.data, ontology);
  const EmbeddingStore store = EmbeddingStore::load(a.paths.emb);
  const JointModel model = model_from_checkpoint(load_checkpoint(a.paths.ckpt));
  DecodeFlags flags = a.decode;
  if (!model.config().joint && !flags.beam) flags.slot_only = true;
  const DecodeOptions options = flags.options();
  const auto preds = predict_dataset(model, store, ontology, data, options);
  write_predictions(a.paths.out, preds, options);
  std::printf("wrote %zu predictions (%s decoding) to %s\n", preds.size(),
              std::string(decode_mode_name(options.mode)).c_str(), a.paths.out.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string gold;
  std::string pred;
  std::string target;
  std::string report;
  std::string conll;
};

int cmd_evaluate(const EvaluateArgs& a) {
  require_file(a.gold, "--gold");
  require_file(a.pred, "--pred");
  const auto gold = load_labeled(a.gold);
  const auto pred = load_labeled(a.pred);
  const EvalReport report = evaluate(gold, pred, a.target);
  if (!a.report.empty()) write_text(a.report, report.to_json().dump(2) + "\n");
  if (!a.conll.empty()) {
    std::ofstream out(a.conll, std::ios::binary | std::ios::trunc);
    write_conll(out, gold, pred);
  }
  std::printf("%s\n", report.summary().c_str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct LoioArgs {
  Paths paths;
  TrainFlags flags;
  DecodeFlags decode;
  std::vector<std::string> targets;
};

int cmd_run_loio(const LoioArgs& a) {
  require_file(a.paths.data, "--data");
  require_file(a.paths.test, "--test");
  require_file(a.paths.ontology, "--ontology");
  require_file(a.paths.emb, "--emb");
  require(a.paths.report, "--report");
  TrainConfig config = finish(a.flags);
  const Ontology ontology = Ontology::load(a.paths.ontology);
  config.validate(ontology);
  const auto train = load_dataset(a.paths.data, ontology);
  const auto test = load_dataset(a.paths.test, ontology);
  const EmbeddingStore store = EmbeddingStore::load(a.paths.emb);
  const std::vector<std::string> targets = a.targets.empty() ? ontology.intent_names() : a.targets;
  const auto results = run_loio_experiment(config, a.decode.options(), train, test, store, ontology, targets);
  write_text(a.paths.report, loio_report_json(results).dump(2) + "\n");
  std::printf("%-24s %10s %10s %10s %10s\n", "target", "intent_acc", "slot_f1", "tpr", "fdr");
  for (const auto& r : results) {
    std::printf("%-24s %10.2f %10.2f %10.2f %10.2f\n", r.target.c_str(), r.mean.intent_accuracy,
                r.mean.slots.f1, r.mean.target.tpr, r.mean.target.fdr);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  Paths paths;
  TrainFlags flags;
  DecodeFlags decode;
  std::vector<double> grid = {5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5, 5e-6};
};

int cmd_sweep(const SweepArgs& a) {
  require_file(a.paths.data, "--data");
  require_file(a.paths.ontology, "--ontology");
  require_file(a.paths.emb, "--emb");
  require(a.paths.report, "--report");
  const TrainConfig config = finish(a.flags);
  require(config.target_intent, "--target");
  const Ontology ontology = Ontology::load(a.paths.ontology);
  config.validate(ontology);
  for (double lr : a.grid) {
    if (!(lr > 0.0)) throw ConfigError("--grid entries must be positive");
  }
  const auto data = load_dataset(a.paths.data, ontology);
  const EmbeddingStore store = EmbeddingStore::load(a.paths.emb);
  const auto points = sweep_learning_rates(config, a.decode.options(), a.grid, data, store, ontology);
  write_text(a.paths.report, sweep_report_json(points).dump(2) + "\n");
  std::printf("%-10s %12s %12s %12s\n", "lr", "val_loss", "intent_acc", "slot_f1");
  for (const auto& j : sweep_report_json(points)) {
    std::printf("%-10g %12.6f %12.2f %12.2f\n", j["learning_rate"].get<double>(), j["val_loss"].get<double>(),
                j["val_intent_accuracy"].get<double>(), j["val_slot_f1"].get<double>());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_gen_synthetic(const SyntheticConfig& config, const std::string& out) {
  require(out, "--out");
  const SyntheticCorpus corpus = generate_synthetic(config);
  write_synthetic(corpus, out);
  std::printf("wrote %zu intents, %zu slots, %zu train / %zu test utterances, %zu embeddings to %s\n",
              corpus.ontology.intents().size(), corpus.ontology.slots().size(), corpus.train.size(),
              corpus.test.size(), corpus.store.size(), out.c_str());
  return kOk;
}

struct ManifestArgs {
  std::vector<std::string> data;
  std::string ontology;
  std::string model = "bert-base-uncased";
  std::string store_out = "embeddings.zsemb";
  std::string out;
};

int cmd_gen_manifest(const ManifestArgs& a) {
  require_file(a.ontology, "--ontology");
  require(a.out, "--out");
  const Ontology ontology = Ontology::load(a.ontology);
  std::vector<std::vector<Utterance>> datasets;
  for (const auto& path : a.data) {
    require_file(path, "--data");
    datasets.push_back(load_dataset(path, ontology));
  }
  const auto texts = manifest_texts(ontology, datasets);
  const nlohmann::json manifest = {{"model", a.model}, {"output", a.store_out}, {"strings", texts}};
  write_text(a.out, manifest.dump(2) + "\n");
  std::printf("wrote %zu strings to %s\n", texts.size(), a.out.c_str());
  return kOk;
}

struct GradArgs {
  GradCheckShape shape;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
};

int cmd_check_grad(const GradArgs& a) {
  bool ok = true;
  std::printf("%-8s %-6s %-12s %14s %14s\n", "head", "gamma", "group", "max_rel_err", "max_abs_err");
  for (IntentHead head : {IntentHead::kWordLevel, IntentHead::kSentenceLevel}) {
    for (bool gamma : {true, false}) {
      const GradCheckReport r = grad_check_model(a.shape, head, gamma, a.seed, a.step);
      for (ParamGroup group : kAllGroups) {
        double rel = 0.0, abs = 0.0;
        for (const auto& p : r.params) {
          if (p.group != group) continue;
          rel = std::max(rel, p.max_rel_error);
          abs = std::max(abs, p.max_abs_error);
        }
        std::printf("%-8s %-6s %-12s %14.3e %14.3e\n", std::string(intent_head_name(head)).c_str(),
                    gamma ? "on" : "off", std::string(group_name(group)).c_str(), rel, abs);
      }
      if (!(r.max_rel_error < a.tolerance)) {
        ok = false;
        for (const auto& p : r.params) {
          if (!(p.max_rel_error < a.tolerance)) {
            std::printf("  FAIL %s: max_rel_err=%.3e\n", p.name.c_str(), p.max_rel_error);
          }
        }
      }
    }
  }
  std::printf("%s (tolerance %.1e)\n", ok ? "PASS" : "FAIL", a.tolerance);
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Zero-shot joint intent detection and slot labeling");
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Every subcommand also accepts --config FILE: a flat JSON object keyed by long option "
             "names. Command-line flags override it.\nExit codes: 0 ok, 1 configuration error, "
             "2 runtime error, 3 check failed.");

  TrainArgs train;
  auto* sub_train = app.add_subcommand("train", "Train one model per seed (stage A, then B with --two-stage)");
  add_data_options(sub_train, train.paths);
  sub_train->add_option("--ckpt-dir", train.paths.ckpt_dir, "Output directory for checkpoints and metrics")
      ->capture_default_str();
  add_train_options(sub_train, train.flags);
  sub_train->add_flag("--two-stage", train.two_stage, "Run stage B after stage A")->capture_default_str();
  sub_train->add_flag("--resume", train.resume, "Continue from the .last checkpoints in --ckpt-dir")
      ->capture_default_str();
  sub_train->add_option("--stop-after", train.stop_after, "Stop each stage after this many epochs (0: run all)")
      ->capture_default_str();

  PredictArgs predict;
  auto* sub_predict = app.add_subcommand("predict", "Decode a dataset with a checkpoint");
  sub_predict->add_option("--ckpt", predict.paths.ckpt, "ZSCKPT1 checkpoint")->capture_default_str();
  add_data_options(sub_predict, predict.paths);
  sub_predict->add_option("--out", predict.paths.out, "Predictions JSONL")->capture_default_str();
  add_decode_options(sub_predict, predict.decode);

  EvaluateArgs eval;
  auto* sub_eval = app.add_subcommand("evaluate", "Score predictions against gold");
  sub_eval->add_option("--gold", eval.gold, "Gold dataset JSONL")->capture_default_str();
  sub_eval->add_option("--pred", eval.pred, "Predictions JSONL")->capture_default_str();
  sub_eval->add_option("--target", eval.target, "Target intent for TPR/FDR")->capture_default_str();
  sub_eval->add_option("--report", eval.report, "EvalReport JSON output")->capture_default_str();
  sub_eval->add_option("--conll-dump", eval.conll, "CONLL-format dump (token gold pred)")->capture_default_str();

  LoioArgs loio;
  auto* sub_loio = app.add_subcommand("run-loio", "Leave-one-intent-out experiment");
  add_data_options(sub_loio, loio.paths);
  sub_loio->add_option("--test", loio.paths.test, "Test dataset JSONL")->capture_default_str();
  sub_loio->add_option("--report", loio.paths.report, "Report JSON output")->capture_default_str();
  sub_loio->add_option("--targets", loio.targets, "Target intents, comma separated (default: all)")
      ->delimiter(',');
  add_train_options(sub_loio, loio.flags);
  add_decode_options(sub_loio, loio.decode);

  SweepArgs sweep;
  auto* sub_sweep = app.add_subcommand("sweep-lr", "Learning-rate grid scored on the validation split");
  add_data_options(sub_sweep, sweep.paths);
  sub_sweep->add_option("--report", sweep.paths.report, "Report JSON output")->capture_default_str();
  sub_sweep->add_option("--grid", sweep.grid, "Learning rates, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  add_train_options(sub_sweep, sweep.flags);
  add_decode_options(sub_sweep, sweep.decode);

  SyntheticConfig synth;
  std::string synth_out;
  auto* sub_synth = app.add_subcommand("gen-synthetic", "Write the synthetic zero-shot corpus");
  sub_synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
  sub_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  sub_synth->add_option("--train-size", synth.train_size, "Training utterances")->capture_default_str();
  sub_synth->add_option("--test-size", synth.test_size, "Test utterances")->capture_default_str();
  sub_synth->add_option("--dim-enc", synth.dim_enc, "Embedding width")->capture_default_str();
  sub_synth->add_option("--value-noise", synth.value_noise, "Spread of slot values around descriptions")
      ->capture_default_str();

  ManifestArgs manifest;
  auto* sub_manifest = app.add_subcommand("gen-manifest", "List every string the exporter must embed");
  sub_manifest->add_option("--data", manifest.data, "Dataset JSONL files, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  sub_manifest->add_option("--ontology", manifest.ontology, "Ontology JSON")->capture_default_str();
  sub_manifest->add_option("--model", manifest.model, "Encoder model identifier")->capture_default_str();
  sub_manifest->add_option("--store-out", manifest.store_out, "Store path recorded in the manifest")
      ->capture_default_str();
  sub_manifest->add_option("--out", manifest.out, "Manifest JSON output")->capture_default_str();

  GradArgs grad;
  auto* sub_grad = app.add_subcommand("check-grad", "Finite-difference check of every model gradient");
  sub_grad->add_option("--dim", grad.shape.dim, "Translated width")->capture_default_str();
  sub_grad->add_option("--dim-enc", grad.shape.dim_enc, "Embedding width")->capture_default_str();
  sub_grad->add_option("--tokens", grad.shape.tokens, "Utterance tokens (T)")->capture_default_str();
  sub_grad->add_option("--intent-words", grad.shape.intent_words, "Intent description tokens (Q)")
      ->capture_default_str();
  sub_grad->add_option("--slot-words", grad.shape.slot_words, "Slot description tokens (S)")
      ->capture_default_str();
  sub_grad->add_option("--exemplars", grad.shape.exemplars, "Exemplars per slot (K)")->capture_default_str();
  sub_grad->add_option("--intent-slots", grad.shape.intent_slots, "Slots of the intent (L)")
      ->capture_default_str();
  sub_grad->add_option("--step", grad.step, "Central-difference step")->capture_default_str();
  sub_grad->add_option("--tolerance", grad.tolerance, "Maximum relative error")->capture_default_str();
  sub_grad->add_option("--seed", grad.seed, "Fixture seed")->capture_default_str();

  std::vector<std::string> scopes;
  for (const auto* sub : app.get_subcommands({})) scopes.push_back(sub->get_name());
  app.set_config("--config", "", "JSON config file: a flat object keyed by long option names");
  app.config_formatter(std::make_shared<JsonConfig>(scopes));
  app.allow_config_extras(CLI::config_extras_mode::ignore);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (sub_train->parsed()) return cmd_train(train);
    if (sub_predict->parsed()) return cmd_predict(predict);
    if (sub_eval->parsed()) return cmd_evaluate(eval);
    if (sub_loio->parsed()) return cmd_run_loio(loio);
    if (sub_sweep->parsed()) return cmd_sweep(sweep);
    if (sub_synth->parsed()) return cmd_gen_synthetic(synth, synth_out);
    if (sub_manifest->parsed()) return cmd_gen_manifest(manifest);
    if (sub_grad->parsed()) return cmd_check_grad(grad);
  } catch (const MissingEmbeddingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const CheckpointVersionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const EvalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
