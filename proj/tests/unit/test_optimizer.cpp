#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lmfcn/optimizer.hpp"
#include "lmfcn/tensor.hpp"

using namespace lmfcn;

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  std::vector<double> x = {1.0, -2.0, 0.5};
  const std::vector<double> g = {0.3, -4.0, 0.0};
  Adam adam;
  adam.step(std::vector<ParamSlot>{{"x", x, g}});
  // m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
  EXPECT_NEAR(x[0], 1.0 - 1e-3 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(x[1], -2.0 + 1e-3 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_EQ(x[2], 0.5);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, MatchesReferenceRecursion) {
  std::vector<double> x = {0.0};
  std::vector<double> g = {0.0};
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  Adam adam(cfg);
  double m = 0.0;
  double v = 0.0;
  double ref = 0.0;
  for (int t = 1; t <= 5; ++t) {
    g[0] = 2.0 * (ref - 3.0);  // gradient of (x - 3)^2 at the reference iterate
    m = 0.9 * m + 0.1 * g[0];
    v = 0.999 * v + 0.001 * g[0] * g[0];
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    ref -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    adam.step(std::vector<ParamSlot>{{"x", x, g}});
    EXPECT_NEAR(x[0], ref, 1e-15);
  }
}

TEST(Adam, NonFiniteGradientLeavesParametersUntouched) {
  std::vector<double> a = {1.0};
  std::vector<double> b = {2.0};
  const std::vector<double> ga = {0.1};
  const std::vector<double> gb = {std::numeric_limits<double>::quiet_NaN()};
  Adam adam;
  try {
    adam.step(std::vector<ParamSlot>{{"a", a, ga}, {"b", b, gb}});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find('b'), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(b[0], 2.0);
  EXPECT_EQ(adam.steps(), 0u);
}

TEST(Adam, LayoutChangeIsRejected) {
  std::vector<double> a = {1.0};
  std::vector<double> ab = {1.0, 2.0};
  const std::vector<double> g1 = {0.1};
  const std::vector<double> g2 = {0.1, 0.2};
  Adam adam;
  adam.step(std::vector<ParamSlot>{{"a", a, g1}});
  EXPECT_THROW(adam.step(std::vector<ParamSlot>{{"a", ab, g2}}), ShapeError);
}
