#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "zsnlu_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args) {
  const fs::path log = work_dir() / "last_output.txt";
  const std::string cmd = std::string(ZSNLU_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Small synthetic corpus plus a one-epoch checkpoint, built once.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    const fs::path d = work_dir() / "syn";
    const Result r = run("gen-synthetic --out " + d.string() + " --train-size 60 --test-size 10 --dim-enc 12");
    EXPECT_EQ(r.code, 0) << r.output;
    return d;
  }();
  return dir;
}

std::string data_args() {
  const fs::path& d = corpus_dir();
  return " --ontology " + (d / "ontology.json").string() + " --emb " + (d / "embeddings.zsemb").string();
}

const fs::path& checkpoint() {
  static const fs::path ckpt = [] {
    const fs::path out = work_dir() / "ckpt";
    const Result r = run("train --data " + (corpus_dir() / "train.jsonl").string() + data_args() +
                         " --ckpt-dir " + out.string() + " --epochs 1 --seed 1 --dim 8 --target GetWeather");
    EXPECT_EQ(r.code, 0) << r.output;
    return out / "seed-1" / "stage_a.zsckpt";
  }();
  return ckpt;
}

}  // namespace

TEST(Cli, HelpListsDefaultsAndExitCodes) {
  const Result top = run("--help");
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.output.find("Exit codes: 0 ok, 1 configuration error, 2 runtime error, 3 check failed"),
            std::string::npos);
  const Result train = run("train --help");
  EXPECT_EQ(train.code, 0);
  for (const char* text : {"--lr FLOAT [0.005]", "--epochs UINT [20]", "--batch UINT [16]", "[wlevel]"}) {
    EXPECT_NE(train.output.find(text), std::string::npos) << text;
  }
  const Result predict = run("predict --help");
  EXPECT_NE(predict.output.find("--V UINT [3]"), std::string::npos) << predict.output;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("train --epochs notanumber").code, 1);
  EXPECT_EQ(run("train --data missing.jsonl --ontology missing.json --emb missing.zsemb --ckpt-dir x").code, 1);
  EXPECT_EQ(run("train --data " + (corpus_dir() / "train.jsonl").string() + data_args() +
                " --ckpt-dir " + (work_dir() / "bad").string() + " --lr -1 --target GetWeather")
                .code,
            1);
  EXPECT_EQ(run("train --data " + (corpus_dir() / "train.jsonl").string() + data_args() +
                " --ckpt-dir " + (work_dir() / "bad").string() + " --target NoSuchIntent")
                .code,
            1);
}

TEST(Cli, OldCheckpointIsAConfigurationError) {
  const fs::path old = work_dir() / "old.zsckpt";
  std::string bytes = slurp(checkpoint());
  bytes[6] = '0';
  std::ofstream(old, std::ios::binary) << bytes;
  const Result r = run("predict --ckpt " + old.string() + " --data " + (corpus_dir() / "test.jsonl").string() +
                       data_args() + " --out " + (work_dir() / "p.jsonl").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("ZSCKPT1"), std::string::npos) << r.output;
}

TEST(Cli, MissingEmbeddingExitsTwoAndNamesTheString) {
  const fs::path data = work_dir() / "unseen.jsonl";
  std::ofstream(data) << R"({"tokens":["is","it","sunny","in","atlantis"],"intent":"GetWeather","bio":["O","O","O","O","B-city"]})"
                      << "\n";
  const Result r = run("predict --ckpt " + checkpoint().string() + " --data " + data.string() + data_args() +
                       " --out " + (work_dir() / "p.jsonl").string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("\"is it sunny in atlantis\""), std::string::npos) << r.output;
}

TEST(Cli, PredictThenEvaluate) {
  const fs::path pred = work_dir() / "pred.jsonl";
  const fs::path report = work_dir() / "report.json";
  const fs::path conll = work_dir() / "dump.conll";
  const fs::path gold = corpus_dir() / "test.jsonl";
  ASSERT_EQ(run("predict --beam --ckpt " + checkpoint().string() + " --data " + gold.string() + data_args() +
                " --out " + pred.string())
                .code,
            0);
  EXPECT_EQ(line_count(pred), 10u);
  const Result r = run("evaluate --gold " + gold.string() + " --pred " + pred.string() +
                       " --target GetWeather --report " + report.string() + " --conll-dump " + conll.string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(slurp(report).find("slot_f1"), std::string::npos);
  EXPECT_GT(line_count(conll), 10u);
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  const fs::path cfg = work_dir() / "cfg.json";
  std::ofstream(cfg) << R"({"epochs": 2, "seed": [5], "dim": 8, "target": "GetWeather"})";
  const std::string base = "train --config " + cfg.string() + " --data " + (corpus_dir() / "train.jsonl").string() +
                           data_args() + " --ckpt-dir ";
  const fs::path from_file = work_dir() / "cfg_only";
  ASSERT_EQ(run(base + from_file.string()).code, 0);
  EXPECT_EQ(line_count(from_file / "seed-5" / "stage_a.metrics.csv"), 3u);  // header + 2 epochs

  const fs::path overridden = work_dir() / "cfg_flag";
  ASSERT_EQ(run(base + overridden.string() + " --epochs 1").code, 0);
  EXPECT_EQ(line_count(overridden / "seed-5" / "stage_a.metrics.csv"), 2u);

  const fs::path broken = work_dir() / "broken.json";
  std::ofstream(broken) << "{ not json";
  EXPECT_EQ(run("train --config " + broken.string()).code, 1);
}

TEST(Cli, CheckGradPassesAndFailsOnImpossibleTolerance) {
  const Result ok = run("check-grad");
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_NE(ok.output.find("PASS"), std::string::npos);
  const Result strict = run("check-grad --tolerance 1e-30");
  EXPECT_EQ(strict.code, 3) << strict.output;
  EXPECT_NE(strict.output.find("FAIL"), std::string::npos);
}

TEST(Cli, GenManifestListsEveryString) {
  const fs::path out = work_dir() / "manifest.json";
  const Result r = run("gen-manifest --data " + (corpus_dir() / "train.jsonl").string() + "," +
                       (corpus_dir() / "test.jsonl").string() + " --ontology " +
                       (corpus_dir() / "ontology.json").string() + " --store-out store.zsemb --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string text = slurp(out);
  for (const char* s : {"\"model\"", "bert-base-uncased", "\"strings\"", "get weather", "store.zsemb"}) {
    EXPECT_NE(text.find(s), std::string::npos) << s;
  }
}
