#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gcl/nonlinearity.hpp"
#include "gcl/smooth_step.hpp"

using namespace gcl;

namespace {
const double kLambda1 = 2.0 * std::numbers::pi * std::numbers::pi;
}

TEST(Nonlinearity, CubicPasses) {
  const NonlinearityAudit a = audit_nonlinearity(Nonlinearity::cubic(), kLambda1);
  EXPECT_TRUE(a.pass()) << a.failure;
  EXPECT_NEAR(a.C_f, 3.0, 1e-9);
}

TEST(Nonlinearity, IdentityDamping) {
  const NonlinearityAudit a = audit_nonlinearity(Nonlinearity::none().with_linear_damping(1.0), kLambda1);
  EXPECT_TRUE(a.damping_ok);
  EXPECT_DOUBLE_EQ(a.m1_observed, 1.0);
  EXPECT_DOUBLE_EQ(a.m2_observed, 1.0);
}

TEST(Nonlinearity, StrongAntiDampingFails) {
  const NonlinearityAudit a = audit_nonlinearity(Nonlinearity::polynomial(-2.0 * kLambda1, 0.0, 0.0), kLambda1);
  EXPECT_FALSE(a.dissipative_ok);
  EXPECT_FALSE(a.pass());
  EXPECT_FALSE(a.failure.empty());
}

TEST(Nonlinearity, TanhBlendBounds) {
  const Nonlinearity nl = Nonlinearity::cubic().with_tanh_damping(1.0, 3.0);
  const NonlinearityAudit a = audit_nonlinearity(nl, kLambda1);
  EXPECT_TRUE(a.damping_ok);
  EXPECT_NEAR(a.m1_observed, 1.0, 1e-6);
  EXPECT_NEAR(a.m2_observed, 3.0, 1e-9);
}

TEST(Nonlinearity, AntiderivativeAndSlope) {
  const Nonlinearity nl = Nonlinearity::polynomial(0.5, -1.0, 2.0);
  for (double z : {-1.3, 0.0, 0.7, 2.0}) {
    const double h = 1e-6;
    EXPECT_NEAR((nl.F(z + h) - nl.F(z - h)) / (2 * h), nl.f(z), 1e-8);
    EXPECT_NEAR((nl.f(z + h) - nl.f(z - h)) / (2 * h), nl.df(z), 1e-6);
    EXPECT_DOUBLE_EQ(nl.F_slope(z, z), nl.f(z));
    EXPECT_NEAR(nl.F_slope(z, 0.3), (nl.F(z) - nl.F(0.3)) / (z - 0.3 + (z == 0.3)), 1e-12);
  }
  EXPECT_EQ(nl.F(0.0), 0.0);
}

TEST(SmoothStep, EndpointsAndMonotone) {
  EXPECT_EQ(smooth_step(0.0).v, 0.0);
  EXPECT_EQ(smooth_step(1.0).v, 1.0);
  double prev = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double v = smooth_step(k / 100.0).v;
    EXPECT_GE(v, prev);
    prev = v;
  }
}
