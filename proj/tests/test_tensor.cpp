#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "zsnlu/tensor.hpp"

using namespace zsnlu;

TEST(Tensor, ShapeAndStorage) {
  Tensor t(2, 3, 1.5);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.shape(), (std::vector<std::size_t>{2, 3}));
  t(1, 2) = 4.0;
  EXPECT_EQ(t[5], 4.0);
  EXPECT_EQ(t.shape_string(), "[2x3]");
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Tensor, ItemRequiresScalar) {
  EXPECT_EQ(Tensor::scalar(3.0).item(), 3.0);
  EXPECT_THROW(Tensor(1, 2).item(), ShapeError);
}

TEST(Tensor, IdentityAndFinite) {
  const Tensor i = Tensor::identity(3);
  EXPECT_EQ(i(0, 0), 1.0);
  EXPECT_EQ(i(0, 1), 0.0);
  EXPECT_TRUE(i.all_finite());
  Tensor bad = Tensor::row({1.0, NAN});
  EXPECT_FALSE(bad.all_finite());
}

TEST(Softmax, Symmetric) {
  const auto p = softmax(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, AnalyticTwoThirds) {
  const auto p = softmax(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesDirectFormula) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> logits(7);
  for (double& v : logits) v = u(rng);
  const auto p = softmax(logits);
  double z = 0.0;
  for (double v : logits) z += std::exp(v);
  for (std::size_t i = 0; i < logits.size(); ++i) EXPECT_NEAR(p[i], std::exp(logits[i]) / z, 1e-12);
}

TEST(Softmax, PropertiesOnRandomInputs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(static_cast<std::size_t>(len(rng)));
    for (double& v : logits) v = u(rng);
    const auto p = softmax(logits);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    std::vector<double> shifted = logits;
    for (double& v : shifted) v += 123.25;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Softmax, EmptyThrows) { EXPECT_THROW(softmax(std::vector<double>{}), std::invalid_argument); }
