#include <gtest/gtest.h>

#include <cmath>

#include "gcl/geometry.hpp"
#include "gcl/region.hpp"

using namespace gcl;

namespace {

const Grid& square128() {
  static const Grid g(Domain::rectangle(1.0, 1.0), 128);
  return g;
}

}  // namespace

TEST(Controllability, CornerPatch) {
  const Grid g(Domain::rectangle(1.0, 1.0), 10);
  const auto r = check_epsilon_controllable(preset_corner_patch(g, 0.1), 0.5, g);
  EXPECT_TRUE(r.controllable);
  EXPECT_NEAR(r.measures.sum(), 0.21, 1e-12);
}

TEST(Controllability, FrameFails) {
  const Grid& g = square128();
  EXPECT_FALSE(check_epsilon_controllable(preset(g, "omega1"), 0.5, g).controllable);
  EXPECT_FALSE(check_epsilon_controllable(preset(g, "omega1"), 2.0, g).controllable);
}

TEST(Controllability, EmptyRegion) {
  const Grid& g = square128();
  EXPECT_TRUE(check_epsilon_controllable(ControlRegion::empty(g), 1e-9, g).controllable);
}

TEST(EscapePotential, InteriorChartAtCenter) {
  const Grid& g = square128();
  const EscapePotential d = EscapePotential::interior_chart(Vec2(0.5, 0.5), 1.0);
  const EscapeSample s = eval_escape(d, Vec2(0.5, 0.5), g.domain());
  EXPECT_DOUBLE_EQ(s.value, 1.0);
  EXPECT_DOUBLE_EQ(s.grad.norm(), 0.0);
  EXPECT_TRUE(s.hess.isApprox(Mat2::Identity()));
}

TEST(EscapePotential, InteriorHessianIsMetric) {
  const Grid& g = square128();
  const EscapePotential d = EscapePotential::interior_chart(Vec2(0.5, 0.5), 1.0);
  const EscapeSample s = eval_escape(d, Vec2(0.2, 0.9), g.domain());
  for (const Vec2& X : {Vec2(1.0, 0.0), Vec2(0.3, -2.0), Vec2(-1.5, 0.7)}) {
    EXPECT_NEAR(X.dot(s.hess * X), X.squaredNorm(), 1e-14);
  }
}

TEST(EscapePotential, BoundaryChartPointsInward) {
  const Grid& g = square128();
  const EscapePotential d = EscapePotential::boundary_chart(Vec2(0.5, 0.0), Vec2(0.0, 1.0), 1.0);
  for (double x : {0.3, 0.5, 0.7}) {
    const EscapeSample s = eval_escape(d, Vec2(x, 0.0), g.domain());
    EXPECT_NEAR(s.grad.dot(Vec2(0.0, -1.0)), -1.0, 1e-14);
  }
}

TEST(EscapePotential, OutsidePointRejected) {
  const Grid& g = square128();
  const EscapePotential d = EscapePotential::interior_chart(Vec2(0.5, 0.5), 1.0);
  EXPECT_THROW(eval_escape(d, Vec2(1.5, 0.5), g.domain()), ValidationError);
}

TEST(EscapeConditions, ConstantPotentialFailsD3) {
  const Grid& g = square128();
  const EscapePotential d = EscapePotential::custom([](const Vec2&) {
    EscapeSample s;
    s.value = 1.0;
    return s;
  });
  const EscapeReport r = verify_escape_conditions(d, CellMask(g.cell_count(), 1), g, 1e-6);
  EXPECT_FALSE(r.d3.pass);
}

TEST(EscapeConditions, ConcavePotentialFailsD2) {
  const Grid& g = square128();
  const Vec2 p(0.5, 0.5);
  const EscapePotential d = EscapePotential::custom([p](const Vec2& x) {
    EscapeSample s;
    s.value = 10.0 - 0.5 * (x - p).squaredNorm();
    s.grad = -(x - p);
    s.hess = -Mat2::Identity();
    return s;
  });
  const EscapeReport r = verify_escape_conditions(d, CellMask(g.cell_count(), 1), g, 1e-6);
  EXPECT_FALSE(r.d2.pass);
}

class AdmissibleTest : public ::testing::TestWithParam<std::pair<int, double>> {};

TEST_P(AdmissibleTest, BudgetAndEscapeConditions) {
  const auto [res, eps] = GetParam();
  const Grid g(Domain::rectangle(1.0, 1.0), res);
  const AdmissibleRegion a = build_admissible_region(g, eps, eps / 2.0, 4);
  const MeasurePair m = measure(a.omega, g);
  EXPECT_LT(m.sum(), eps);
  EXPECT_TRUE(verify_escape_conditions(a.d, a.V, g, 1e-6).pass());
  for (const MeasurePair& s : a.shells) EXPECT_LT(s.interior, eps / 2.0 / (2 * 4));
}

INSTANTIATE_TEST_SUITE_P(Budgets, AdmissibleTest,
                         ::testing::Values(std::make_pair(128, 0.1), std::make_pair(128, 0.2),
                                           std::make_pair(256, 0.05)));

TEST(Admissible, InfeasibleBudgetNamesMinimum) {
  const Grid g(Domain::rectangle(1.0, 1.0), 32);
  try {
    build_admissible_region(g, 0.05, 0.025, 4);
    FAIL() << "expected infeasible budget";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
}

TEST(Admissible, Epsilon0MustBeSmaller) {
  EXPECT_THROW(build_admissible_region(square128(), 0.1, 0.1, 4), ValidationError);
}

// Diagonal quadrants also meet at the central seam crossing, so the graph is the 4-cycle plus both chords.
TEST(Overlap, QuadrantGraph) {
  const Grid& g = square128();
  const AdmissibleRegion a = build_admissible_region(g, 0.1, 0.05, 4);
  const OverlapDecomposition dec = build_overlap_decomposition(g, a, 1e-6);
  ASSERT_EQ(dec.omega.size(), 4u);
  EXPECT_EQ(dec.edges.size(), 6u);
  std::vector<int> degree(4, 0);
  for (const auto& [i, j] : dec.edges) {
    ++degree[static_cast<std::size_t>(i)];
    ++degree[static_cast<std::size_t>(j)];
  }
  for (int dgr : degree) EXPECT_EQ(dgr, 3);
  EXPECT_TRUE(dec.meets_omega);
  for (const EscapeReport& r : dec.reports) EXPECT_TRUE(r.pass());
  EXPECT_TRUE(dec.pass());
}

TEST(Presets, FigureTrio) {
  const Grid& g = square128();
  EXPECT_NEAR(measure(preset(g, "omega1"), g).boundary, 4.0, 1e-12);
  EXPECT_GT(preset(g, "omega2").cell_count(), 0u);
  EXPECT_GT(preset(g, "omega3").cell_count(), 0u);
  EXPECT_THROW(preset(g, "omega4"), ValidationError);
}
