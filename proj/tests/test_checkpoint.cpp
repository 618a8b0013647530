#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "zsnlu/checkpoint.hpp"

using namespace zsnlu;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("zsnlu_ckpt_" + name)).string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

Checkpoint sample_checkpoint() {
  ModelConfig c;
  c.dim_enc = 6;
  c.dim = 4;
  c.l_max = 2;
  c.intent_head = IntentHead::kSentenceLevel;
  JointModel m(c, 9);
  m.params().set_frozen(ParamGroup::kTranslation, true);
  Checkpoint ckpt = make_checkpoint(m);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  OptimizerSnapshot opt;
  opt.config.learning_rate = 5e-3;
  opt.config.total_steps = 40;
  opt.step = 7;
  for (const auto& p : ckpt.params.all()) {
    Tensor a(p.value.rows(), p.value.cols()), b(p.value.rows(), p.value.cols());
    for (double& v : a.values()) v = n(rng);
    for (double& v : b.values()) v = std::abs(n(rng));
    opt.first_moments.push_back(a);
    opt.second_moments.push_back(b);
  }
  ckpt.optimizer = opt;
  ckpt.epochs_completed = 3;
  ckpt.info = {{"stage", "A"}, {"val_loss", 0.125}};
  return ckpt;
}

std::string what_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const Checkpoint ckpt = sample_checkpoint();
  const auto path = temp_path("rt.zsckpt");
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.config, ckpt.config);
  EXPECT_EQ(back.epochs_completed, 3u);
  EXPECT_EQ(back.info, ckpt.info);
  EXPECT_TRUE(back.params.frozen(ParamGroup::kTranslation));
  EXPECT_FALSE(back.params.frozen(ParamGroup::kAdapter));
  ASSERT_EQ(back.params.size(), ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    EXPECT_EQ(back.params.all()[i].name, ckpt.params.all()[i].name);
    EXPECT_EQ(back.params.all()[i].group, ckpt.params.all()[i].group);
    EXPECT_EQ(back.params.all()[i].value, ckpt.params.all()[i].value);
  }
  ASSERT_TRUE(back.optimizer);
  EXPECT_EQ(back.optimizer->step, 7u);
  EXPECT_EQ(back.optimizer->config.total_steps, 40u);
  EXPECT_EQ(back.optimizer->config.learning_rate, 5e-3);
  EXPECT_EQ(back.optimizer->first_moments, ckpt.optimizer->first_moments);
  EXPECT_EQ(back.optimizer->second_moments, ckpt.optimizer->second_moments);

  const auto again = temp_path("rt2.zsckpt");
  save_checkpoint(back, again);
  EXPECT_EQ(read_bytes(path), read_bytes(again));
}

TEST(Checkpoint, WithoutOptimizer) {
  Checkpoint ckpt = sample_checkpoint();
  ckpt.optimizer.reset();
  const auto path = temp_path("noopt.zsckpt");
  save_checkpoint(ckpt, path);
  EXPECT_FALSE(load_checkpoint(path).optimizer.has_value());
}

TEST(Checkpoint, ModelRestoresIdenticalPredictions) {
  const Checkpoint ckpt = sample_checkpoint();
  const JointModel original = model_from_checkpoint(ckpt);
  const auto path = temp_path("model.zsckpt");
  save_checkpoint(ckpt, path);
  const JointModel restored = model_from_checkpoint(load_checkpoint(path));
  const EmbeddingRecord u = toy_encode("rate this book five stars", 6, 2);
  const EmbeddingRecord intent = toy_encode("rate book", 6, 2);
  const EmbeddingRecord slot = toy_encode("rating value", 6, 2);
  const EmbeddingRecord ex = toy_encode("five", 6, 2);
  PairInputs in{&u, &intent, &slot, {&ex}, {&slot}};
  const JointOutput a = predict_pair(original, in);
  const JointOutput b = predict_pair(restored, in);
  EXPECT_EQ(a.slot_probs, b.slot_probs);
  EXPECT_EQ(a.intent_prob, b.intent_prob);
}

TEST(Checkpoint, OldMagicIsAVersionError) {
  const auto path = temp_path("old.zsckpt");
  save_checkpoint(sample_checkpoint(), path);
  std::string bytes = read_bytes(path);
  ASSERT_EQ(bytes.substr(0, 7), "ZSCKPT1");
  bytes[6] = '0';
  write_bytes(path, bytes);
  EXPECT_THROW(load_checkpoint(path), CheckpointVersionError);
  EXPECT_NE(what_of([&] { load_checkpoint(path); }).find("ZSCKPT1"), std::string::npos);
}

TEST(Checkpoint, TruncationAndTrailingBytesAreRejected) {
  const auto path = temp_path("trunc.zsckpt");
  save_checkpoint(sample_checkpoint(), path);
  const std::string bytes = read_bytes(path);
  for (std::size_t cut : {std::size_t{3}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
    write_bytes(path, bytes.substr(0, cut));
    EXPECT_THROW(load_checkpoint(path), CheckpointError) << "cut at " << cut;
  }
  write_bytes(path, bytes + "x");
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  EXPECT_THROW(load_checkpoint(temp_path("does_not_exist")), CheckpointError);
}
