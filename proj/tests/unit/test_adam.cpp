#include <gtest/gtest.h>

#include <cmath>

#include "adablur/adam.hpp"
#include "adablur/errors.hpp"
#include "adablur/ops.hpp"

using namespace adablur;

namespace {

// Reference recurrence written out by hand for a scalar parameter.
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor p = Tensor::from_data({3}, {0.1, -0.2, 0.3}, true);
  Adam opt({p}, {1e-2});
  backward(scale(sum(p), 0.0));
  opt.step();
  EXPECT_EQ(p.data()[0], 0.1);
  EXPECT_EQ(p.data()[1], -0.2);
  EXPECT_EQ(p.data()[2], 0.3);
  EXPECT_EQ(opt.step_count(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor p = Tensor::from_data({1}, {0.0}, true);
  Adam opt({p}, {1e-4});
  backward(sum(p));  // gradient 1
  opt.step();
  EXPECT_NEAR(-p.data()[0], 1e-4 / (1.0 + 1e-8), 1e-19);
}

TEST(Adam, MatchesHandRecurrenceOnQuadraticBowl) {
  Tensor p = Tensor::from_data({1}, {1.0}, true);
  Adam opt({p}, {0.05});
  ScalarAdam ref{0.05};
  double x = 1.0;
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    backward(sum(matmul(reshape(p, {1, 1}), reshape(p, {1, 1}))));  // x^2
    opt.step();
    x = ref.step(x, 2.0 * x);
    ASSERT_NEAR(p.data()[0], x, 1e-12) << "step " << i;
  }
  EXPECT_LT(std::abs(p.data()[0]), 0.05);
}

TEST(Adam, MissingGradientThrows) {
  Tensor p = Tensor::from_data({1}, {1.0}, true);
  Adam opt({p});
  EXPECT_THROW(opt.step(), InvalidArgument);
}

TEST(Adam, ZeroGradClearsAccumulation) {
  Tensor p = Tensor::from_data({2}, {1.0, 2.0}, true);
  Adam opt({p});
  backward(sum(p));
  opt.zero_grad();
  for (double g : p.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Adam, RejectsBadOptions) {
  Tensor p = Tensor::from_data({1}, {1.0}, true);
  EXPECT_THROW(Adam({p}, AdamOptions{-1.0}), InvalidArgument);
  EXPECT_THROW(Adam({p}, AdamOptions{1e-3, 1.0}), InvalidArgument);
}

TEST(Adam, SetLrAppliesToLaterSteps) {
  Tensor p = Tensor::from_data({1}, {0.0}, true);
  Adam opt({p}, {1e-4});
  opt.set_lr(3e-4);
  backward(sum(p));
  opt.step();
  EXPECT_NEAR(-p.data()[0], 3e-4 / (1.0 + 1e-8), 1e-19);
  EXPECT_THROW(opt.set_lr(0.0), InvalidArgument);
  EXPECT_EQ(opt.options().lr, 3e-4);
}
