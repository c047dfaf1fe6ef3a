#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mitodet/losses.hpp"
#include "oracles.hpp"

namespace mitodet::losses {
namespace {

TEST(SmoothL1, PiecewiseValues) {
  EXPECT_EQ(smooth_l1(0.0).value, 0.0);
  EXPECT_EQ(smooth_l1(0.5).value, 0.125);
  EXPECT_EQ(smooth_l1(1.0).value, 0.5);
  EXPECT_EQ(smooth_l1(-1.0).value, 0.5);
  EXPECT_EQ(smooth_l1(3.0).value, 2.5);
  EXPECT_EQ(smooth_l1(-0.25).grad, -0.25);
  EXPECT_EQ(smooth_l1(-2.0).grad, -1.0);
  EXPECT_EQ(smooth_l1(1.0f).value, 0.5f);
}

TEST(SmoothL1, ContinuousAtKink) {
  for (double s : {-1.0, 1.0}) {
    EXPECT_NEAR(smooth_l1(s * (1.0 - 1e-9)).value, smooth_l1(s).value, 1e-8);
    EXPECT_NEAR(smooth_l1(s * (1.0 - 1e-9)).grad, smooth_l1(s).grad, 1e-8);
  }
}

TEST(ClsLogLoss, ValuesAndClamp) {
  EXPECT_NEAR(cls_log_loss(0.5, 1).value, std::numbers::ln2, 1e-15);
  EXPECT_NEAR(cls_log_loss(0.25, 0).value, -std::log(0.75), 1e-15);
  EXPECT_NEAR(cls_log_loss(0.25, 1).grad, -4.0, 1e-12);
  EXPECT_NEAR(cls_log_loss(0.25, 0).grad, 1.0 / 0.75, 1e-12);
  const auto extreme = cls_log_loss(0.0, 1);
  EXPECT_TRUE(std::isfinite(extreme.value));
  EXPECT_NEAR(extreme.value, -std::log(1e-12), 1e-9);
  EXPECT_EQ(extreme.grad, 0.0);
  EXPECT_TRUE(std::isfinite(cls_log_loss(1.0, 0).value));
}

ClsRegBatch example_batch() {
  ClsRegBatch b;
  b.probabilities = {0.8, 0.3};
  b.labels = {1, 0};
  b.predicted_deltas = {Box4{0.5, 0.0, 2.0, 0.0}, Box4{9, 9, 9, 9}};
  b.target_deltas = {Box4{0, 0, 0, 0}, Box4{0, 0, 0, 0}};
  b.n_cls = 2;
  b.n_reg = 1;
  b.lambda = 2.0;
  return b;
}

TEST(ClsRegLoss, HandComputedExample) {
  const auto r = cls_reg_loss(example_batch());
  const double cls = (-std::log(0.8) - std::log(0.7)) / 2.0;
  const double reg = 2.0 * (0.125 + 1.5);  // negatives contribute no regression
  EXPECT_NEAR(r.cls_term, cls, 1e-15);
  EXPECT_NEAR(r.reg_term, reg, 1e-15);
  EXPECT_NEAR(r.value, cls + reg, 1e-15);
  EXPECT_EQ(r.grad_deltas[1], (Box4{0, 0, 0, 0}));
  EXPECT_NEAR(r.grad_deltas[0][0], 1.0, 1e-15);
  EXPECT_NEAR(r.grad_deltas[0][2], 2.0, 1e-15);
}

TEST(ClsRegLoss, Validation) {
  auto b = example_batch();
  b.labels[0] = 2;
  EXPECT_THROW((void)cls_reg_loss(b), ValidationError);
  b = example_batch();
  b.n_reg = 0;
  EXPECT_THROW((void)cls_reg_loss(b), ValidationError);
  b = example_batch();
  b.probabilities.pop_back();
  EXPECT_THROW((void)cls_reg_loss(b), ValidationError);
}

MaskPair uniform_half(int w, int h, std::uint64_t seed) {
  MaskPair m{w, h, std::vector<double>(static_cast<std::size_t>(w * h), 0.5), {}};
  Rng rng(seed);
  for (int i = 0; i < w * h; ++i) m.truth.push_back(static_cast<int>(uniform_below(rng, 2)));
  return m;
}

TEST(MaskBce, UniformHalfIsLn2) {
  for (int side : {1, 28, 512}) {
    EXPECT_NEAR(mask_bce_loss(uniform_half(side, side, 1)).value, std::numbers::ln2, 1e-9) << side;
  }
}

TEST(MaskBce, PerfectPredictionNearZero) {
  MaskPair m{2, 2, {1.0, 0.0, 0.0, 1.0}, {1, 0, 0, 1}};
  const auto r = mask_bce_loss(m);
  EXPECT_GE(r.value, 0.0);
  EXPECT_LT(r.value, 1e-11);
}

TEST(MaskBce, Validation) {
  EXPECT_THROW((void)mask_bce_loss(MaskPair{2, 2, {0.5}, {1}}), ValidationError);
  EXPECT_THROW((void)mask_bce_loss(MaskPair{1, 1, {1.5}, {1}}), ValidationError);
  EXPECT_THROW((void)mask_bce_loss(MaskPair{1, 1, {0.5}, {2}}), ValidationError);
}

TEST(TotalLoss, SumsComponents) {
  const auto t = total_loss(0.5, 0.25, 0.125);
  EXPECT_EQ(t.total, 0.875);
  EXPECT_THROW((void)total_loss(-1, 0, 0), ValidationError);
}

TEST(GradCheck, DetectsWrongGradient) {
  const Differentiable wrong{[](std::span<const double> x) { return x[0] * x[0]; },
                             [](std::span<const double> x) { return std::vector<double>{x[0]}; }};
  EXPECT_GT(grad_check(wrong, std::array{1.3}), 0.4);
  const Differentiable right{[](std::span<const double> x) { return x[0] * x[0]; },
                             [](std::span<const double> x) { return std::vector<double>{2 * x[0]}; }};
  EXPECT_LT(grad_check(right, std::array{1.3}), 1e-8);
}

TEST(GradCheck, NonFiniteRaises) {
  const Differentiable bad{[](std::span<const double>) { return std::nan(""); },
                           [](std::span<const double>) { return std::vector<double>{0.0}; }};
  EXPECT_THROW((void)grad_check(bad, std::array{0.0}), NonFiniteLoss);
}

TEST(GradientSuite, AllOperatorsPass) {
  const auto reports = run_gradient_suite(200, 11);
  ASSERT_EQ(reports.size(), 4u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.pass) << r.op << " " << r.max_rel_err;
    EXPECT_EQ(r.trials, 200);
  }
}

}  // namespace
}  // namespace mitodet::losses
