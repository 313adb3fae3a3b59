#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gcl/rays.hpp"
#include "gcl/region.hpp"

using namespace gcl;

namespace {

const Grid& square() {
  static const Grid g(Domain::rectangle(1.0, 1.0), 128);
  return g;
}

// Unit-square billiard by unfolding: straight line in the plane, folded back into [0, 1]^2.
double fold(double s) {
  double r = std::fmod(s, 2.0);
  if (r < 0) r += 2.0;
  return r <= 1.0 ? r : 2.0 - r;
}

// Reflection times of the unfolded line x0 + t d over (0, t_max): crossings of integer lines.
std::vector<double> crossing_times(const Vec2& x0, const Vec2& d, double t_max) {
  std::vector<double> ts;
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) continue;
    const double step = 1.0 / std::abs(d[axis]);
    const double first = d[axis] > 0 ? (1.0 - x0[axis]) / d[axis] : x0[axis] / -d[axis];
    for (double t = first; t < t_max; t += step) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  return ts;
}

}  // namespace

TEST(Billiard, FlatWallReflection) {
  RayState r;
  r.x = Vec2(0.25, 0.5);
  r.p = Vec2(1.0, 0.0);
  const TraceResult res = trace_ray(square(), r, nullptr, 1.0);
  ASSERT_GE(res.reflections.size(), 1u);
  EXPECT_NEAR(res.reflections[0].t, 0.75, 1e-14);
  EXPECT_NEAR((res.reflections[0].x - Vec2(1.0, 0.5)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((res.reflections[0].reflected - Vec2(-1.0, 0.0)).norm(), 0.0, 1e-14);
}

TEST(Billiard, ZeroDirectionRejected) {
  RayState r;
  r.x = Vec2(0.5, 0.5);
  EXPECT_THROW(trace_ray(square(), r, nullptr, 1.0), ValidationError);
}

TEST(Billiard, VerticalRayTrappedByStrip) {
  RayState r;
  r.x = Vec2(0.5, 0.1);
  r.p = Vec2(0.0, 1.0);
  const ControlRegion strip = preset(square(), "omega3");
  const TraceResult res = trace_ray(square(), r, &strip, 100.0);
  EXPECT_TRUE(res.trapped);
  EXPECT_FALSE(res.first_hit_time.has_value());
}

TEST(Billiard, UnfoldingOracleDiagonal) {
  const Vec2 x0(0.2, 0.3);
  const Vec2 d = Vec2(1.0, 1.0).normalized();
  RayState r;
  r.x = x0;
  r.p = d;
  const TraceResult res = trace_ray(square(), r, nullptr, 10.0);
  const auto ts = crossing_times(x0, d, 10.0);
  ASSERT_EQ(res.reflections.size(), ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    EXPECT_NEAR(res.reflections[k].t, ts[k], 1e-10);
    const Vec2 y = x0 + ts[k] * d;
    EXPECT_NEAR(res.reflections[k].x.x(), fold(y.x()), 1e-10);
    EXPECT_NEAR(res.reflections[k].x.y(), fold(y.y()), 1e-10);
  }
}

TEST(Billiard, UnfoldingOracleFiftyReflections) {
  const Vec2 x0(0.137, 0.642);
  const Vec2 d = Vec2(std::cos(0.4321), std::sin(0.4321));
  RayState r;
  r.x = x0;
  r.p = d;
  const auto all = crossing_times(x0, d, 60.0);
  ASSERT_GT(all.size(), 50u);
  const double t_max = 0.5 * (all[49] + all[50]);
  const TraceResult res = trace_ray(square(), r, nullptr, t_max);
  ASSERT_EQ(res.reflections.size(), 50u);
  double worst = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    const Vec2 y = x0 + all[k] * d;
    worst = std::max({worst, std::abs(res.reflections[k].t - all[k]), std::abs(res.reflections[k].x.x() - fold(y.x())),
                      std::abs(res.reflections[k].x.y() - fold(y.y()))});
  }
  EXPECT_LT(worst, 1e-10);
  const Vec2 end = x0 + t_max * d;
  EXPECT_NEAR(res.end.x.x(), fold(end.x()), 1e-10);
  EXPECT_NEAR(res.end.x.y(), fold(end.y()), 1e-10);
}

TEST(Billiard, TimeReversal) {
  RayState r;
  r.x = Vec2(0.31, 0.77);
  r.p = Vec2(std::cos(1.1), std::sin(1.1));
  const TraceResult fwd = trace_ray(square(), r, nullptr, 25.0);
  RayState back;
  back.x = fwd.end.x;
  back.p = -fwd.end.p;
  const TraceResult rev = trace_ray(square(), back, nullptr, 25.0);
  EXPECT_LT((rev.end.x - r.x).norm(), 1e-9);
}

TEST(Billiard, VariableSpeedTimeReversal) {
  const Grid g(Domain::rectangle(1.0, 1.0, SpeedField::affine(1.0, Vec2(0.3, 0.2), Vec2(0, 0), Vec2(0, 0),
                                                               Vec2(1, 1))),
               64);
  RayState r;
  r.x = Vec2(0.4, 0.35);
  r.p = Vec2(0.6, 0.8);
  const TraceResult fwd = trace_ray(g, r, nullptr, 3.0);
  RayState back;
  back.x = fwd.end.x;
  back.p = -fwd.end.p;
  const TraceResult rev = trace_ray(g, back, nullptr, 3.0);
  EXPECT_LT((rev.end.x - r.x).norm(), 1e-6);
}

TEST(Gcc, FramePasses) {
  const GccReport rep = check_gcc(square(), preset(square(), "omega1"), 3.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.T_hat, std::sqrt(2.0) + 0.1);
}

TEST(Gcc, CrossPasses) { EXPECT_TRUE(check_gcc(square(), preset(square(), "omega2"), 100.0).pass); }

TEST(Gcc, StripTraps) {
  const GccReport rep = check_gcc(square(), preset(square(), "omega3"), 100.0);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.trapped.empty());
}

TEST(Gcc, WholeDomain) {
  const GccReport rep = check_gcc(square(), ControlRegion::whole(square()), 0.5);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.T_hat, 0.0);
}

TEST(ControlTime, InteriorChartAtCenter) {
  const auto ct = gcc_time_from_potential(EscapePotential::interior_chart(Vec2(0.5, 0.5)), square());
  EXPECT_NEAR(ct.T, std::sqrt(2.0), 1e-12);
  EXPECT_FALSE(ct.valid);  // grad d vanishes at the center
}

TEST(ControlTime, ChartAtCorner) {
  const auto ct = gcc_time_from_potential(EscapePotential::interior_chart(Vec2(0.0, 0.0)), square());
  EXPECT_NEAR(ct.T, 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(ControlTime, ConstantPotentialInvalid) {
  const auto d = EscapePotential::custom([](const Vec2&) {
    EscapeSample s;
    s.value = 1.0;
    return s;
  });
  const auto ct = gcc_time_from_potential(d, square());
  EXPECT_EQ(ct.T, 0.0);
  EXPECT_FALSE(ct.valid);
}

TEST(PotentialCondition, FullAndEmptyGamma) {
  const Grid& g = square();
  const auto d = EscapePotential::interior_chart(Vec2(0.5, 0.5));
  const std::size_t n = g.boundary_segments().size();
  EXPECT_TRUE(check_escape_potential_condition(d, SegmentMask(n, 1), std::sqrt(2.0), g, 1e-9).pass());
  const auto empty = check_escape_potential_condition(d, SegmentMask(n, 0), std::sqrt(2.0), g, 1e-9);
  EXPECT_FALSE(empty.boundary_ok);
  EXPECT_FALSE(empty.offending_segments.empty());
  EXPECT_FALSE(check_escape_potential_condition(d, SegmentMask(n, 1), 1.0, g, 1e-9).gradient_ok);
}

TEST(ObstacleCondition, BoundaryChartEdgeInGamma0) {
  const Grid& g = square();
  const auto d = EscapePotential::boundary_chart(Vec2(0.5, 0.0), Vec2(0.0, 1.0));
  const auto part = boundary_partition(d, g);
  for (std::size_t s = 0; s < g.boundary_segments().size(); ++s) {
    if (g.boundary_segments()[s].normal.y() < -0.5) EXPECT_TRUE(part.gamma0[s]);
  }
  EXPECT_TRUE(check_obstacle_condition(d, part.gamma0, 10.0, g, 1e-9).boundary_ok);
  EXPECT_TRUE(check_obstacle_condition(d, SegmentMask(g.boundary_segments().size(), 0), 10.0, g, 1e-9).boundary_ok);
}

TEST(Partition, CenterChartGamma1IsEverything) {
  const auto part = boundary_partition(EscapePotential::interior_chart(Vec2(0.5, 0.5)), square());
  for (auto b : part.gamma1) EXPECT_TRUE(b);
}

TEST(Pipeline, AdmissibleRegionsPassGcc) {
  const Grid& g = square();
  for (double eps : {0.1, 0.2}) {
    const AdmissibleRegion a = build_admissible_region(g, eps, eps / 2, 4);
    const auto dec = build_overlap_decomposition(g, a);
    const ControlTime ct = gcc_time_from_potential(dec, g);
    ASSERT_TRUE(ct.valid);
    Sampler s;
    const GccReport rep = check_gcc(g, a.omega, ct.T, s);
    EXPECT_TRUE(rep.pass) << "eps " << eps;
    EXPECT_EQ(rep.hits + rep.corner_terminated, rep.samples);
  }
}
