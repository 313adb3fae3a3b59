#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "gcl/ensemble.hpp"
#include "gcl/region.hpp"
#include "gcl/wave.hpp"

using namespace gcl;

namespace {

constexpr double kPi = std::numbers::pi;

const Grid& square(int res) {
  static std::map<int, Grid> cache;
  auto it = cache.find(res);
  if (it == cache.end()) it = cache.emplace(res, Grid(Domain::rectangle(1.0, 1.0), res)).first;
  return it->second;
}

double l2(const std::vector<double>& a, const Grid& g) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s) * g.h();
}

}  // namespace

TEST(Wave, EigenmodeAgainstSeparation) {
  const Grid& g = square(128);
  SolverConfig cfg;
  cfg.T = 1.0;
  cfg.cfl = 0.25;
  const WaveField z = eigenmode(g, 1, 1, 1.0);
  const Trajectory tr = solve_linear(g, z, PotentialPair::zero(), cfg);
  const double c = std::cos(std::sqrt(2.0) * kPi);
  std::vector<double> diff(z.u.size());
  for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = tr.frames.back().u[n] - c * z.u[n];
  EXPECT_LT(l2(diff, g) / (std::abs(c) * l2(z.u, g)), 0.01);
}

TEST(Wave, ConservativeDrift) {
  const Grid& g = square(64);
  SolverConfig cfg;
  cfg.T = 10.0;
  const Trajectory tr = solve_linear(g, modal_ensemble(g, EnsembleSpec{}).front(), PotentialPair::zero(), cfg);
  EXPECT_LT(tr.energy.relative_drift(), 1e-6);
}

TEST(Wave, GlobalFrictionMatchesDampedOscillator) {
  // p1 = -1: u'' + u' + 2 pi^2 u = 0 for the first mode.
  const Grid& g = square(128);
  SolverConfig cfg;
  cfg.T = 2.0;
  cfg.cfl = 0.25;
  const WaveField z = eigenmode(g, 1, 1, 1.0);
  const Trajectory tr = solve_linear(g, z, PotentialPair::constant(0.0, -1.0), cfg);
  const double w = std::sqrt(2.0 * kPi * kPi - 0.25);
  const double t = 2.0;
  const double exact = std::exp(-t / 2) * (std::cos(w * t) + std::sin(w * t) / (2 * w));
  const std::size_t mid = g.node(64, 64);
  EXPECT_NEAR(tr.frames.back().u[mid], exact, 0.02 * std::exp(-t / 2));
}

TEST(Wave, CflViolationRejected) {
  const Grid& g = square(32);
  SolverConfig cfg;
  cfg.cfl = 0.8;
  EXPECT_THROW(choose_time_step(g, cfg), ValidationError);
  cfg.cfl = 0.5;
  cfg.dt = g.h();
  EXPECT_THROW(choose_time_step(g, cfg), ValidationError);
}

TEST(Semilinear, FreeWaveConserved) {
  const Grid& g = square(64);
  SolverConfig cfg;
  cfg.T = 10.0;
  const Trajectory tr = solve_semilinear(g, modal_ensemble(g, EnsembleSpec{}).front(), DampingCoefficient::none(g),
                                         Nonlinearity::none(), cfg);
  EXPECT_LT(tr.energy.relative_drift(), 1e-6);
}

TEST(Semilinear, CubicWithCrossDampingDecreases) {
  const Grid& g = square(128);
  SolverConfig cfg;
  cfg.T = 4.0;
  const auto damping = DampingCoefficient::indicator(g, preset(g, "omega2"), 2.0);
  const Trajectory tr =
      solve_semilinear(g, modal_ensemble(g, EnsembleSpec{}).front(), damping, Nonlinearity::cubic(), cfg);
  EXPECT_TRUE(tr.energy.non_increasing());
  EXPECT_LT(tr.energy.residual_rate(), 1e-4);
  EXPECT_LT(tr.energy.staggered.back(), tr.energy.staggered.front());
}

TEST(Semilinear, FailingAuditRejected) {
  const Grid& g = square(32);
  const Nonlinearity bad = Nonlinearity::polynomial(-4.0 * kPi * kPi * 2, 0.0, 0.0);
  EXPECT_THROW(solve_semilinear(g, eigenmode(g, 1, 1, 1.0), DampingCoefficient::none(g), bad, SolverConfig{}),
               ValidationError);
}

TEST(Energy, ZeroState) {
  const Grid& g = square(32);
  WaveField z;
  z.u.assign(g.node_count(), 0.0);
  z.v.assign(g.node_count(), 0.0);
  const EnergyValue e = energy(z, g);
  EXPECT_EQ(e.E, 0.0);
  EXPECT_EQ(e.total, 0.0);
}

TEST(Energy, FirstMode) {
  // int |grad u|^2 = pi^2 / 2, E = half of it.
  const Grid& g = square(128);
  const WaveField z = eigenmode(g, 1, 1, 1.0);
  EXPECT_NEAR(energy(z, g).E / (kPi * kPi / 4.0), 1.0, 0.005);
  EXPECT_NEAR(h_norm2(z.u, z.v, build_stencil(g)) / (kPi * kPi / 2.0), 1.0, 0.005);
}

TEST(Energy, QuarticPotential) {
  // F(u) = u^4 / 4, int sin^4 sin^4 = (3/8)^2.
  const Grid& g = square(128);
  const WaveField z = eigenmode(g, 1, 1, 1.0);
  const Nonlinearity nl = Nonlinearity::cubic();
  const EnergyValue e = energy(z, g, &nl);
  EXPECT_NEAR(e.total - e.E, 9.0 / 256.0, 1e-6);
}

TEST(EnergyBounds, QuadraticAndCubic) {
  const Grid& g = square(64);
  const double lambda1 = first_dirichlet_eigenvalue(g);
  SolverConfig cfg;
  cfg.T = 2.0;
  const auto damping = DampingCoefficient::uniform(g, 1.0);
  const WaveField z = modal_ensemble(g, EnsembleSpec{}).front();
  const Trajectory lin = solve_semilinear(g, z, damping, Nonlinearity::none(), cfg);
  const EnergyBoundsReport a = energy_bounds_check(lin.energy, Nonlinearity::none(), lambda1);
  EXPECT_TRUE(a.pass());
  EXPECT_DOUBLE_EQ(a.beta_construction, 0.5);
  EXPECT_EQ(a.C1, 0.0);
  const Trajectory cub = solve_semilinear(g, z, damping, Nonlinearity::cubic(), cfg);
  const EnergyBoundsReport b = energy_bounds_check(cub.energy, Nonlinearity::cubic(), lambda1);
  EXPECT_TRUE(b.pass());
  EXPECT_DOUBLE_EQ(b.beta_construction, 0.5);
  EXPECT_EQ(b.C1, 0.0);
}

TEST(EnergyBounds, SubcriticalNegativeLinearPart) {
  const Grid& g = square(64);
  const double lambda1 = first_dirichlet_eigenvalue(g);
  SolverConfig cfg;
  cfg.T = 2.0;
  const Nonlinearity nl = Nonlinearity::cubic(0.5 * lambda1);
  const Trajectory tr =
      solve_semilinear(g, modal_ensemble(g, EnsembleSpec{}).front(), DampingCoefficient::uniform(g, 1.0), nl, cfg);
  const EnergyBoundsReport r = energy_bounds_check(tr.energy, nl, lambda1);
  EXPECT_TRUE(r.pass());
  EXPECT_GT(r.beta, 0.0);
}

TEST(Lipschitz, IdenticalDataDegenerate) {
  const Grid& g = square(32);
  const WaveField z = eigenmode(g, 1, 1, 1.0);
  WaveProblem p;
  const LipschitzReport r = lipschitz_dependence(g, z, z, p, SolverConfig{});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.D_hat, 0.0);
}

TEST(Lipschitz, LinearFlowIsScaleFree) {
  const Grid& g = square(32);
  WaveProblem p;
  p.damping = DampingCoefficient::uniform(g, 1.0).a;
  p.nl = Nonlinearity::none().with_linear_damping(1.0);
  const WaveField base = modal_ensemble(g, EnsembleSpec{}).front();
  auto perturbed = [&](double size) {
    WaveField z = base;
    const WaveField m = eigenmode(g, 2, 1, size);
    for (std::size_t n = 0; n < z.u.size(); ++n) z.u[n] += m.u[n];
    return z;
  };
  SolverConfig cfg;
  cfg.T = 2.0;
  const double d1 = lipschitz_dependence(g, base, perturbed(1e-6), p, cfg).D_hat;
  const double d2 = lipschitz_dependence(g, base, perturbed(5e-7), p, cfg).D_hat;
  EXPECT_GT(d1, 0.0);
  EXPECT_NEAR(d1 / d2, 1.0, 0.01);
}

TEST(Lipschitz, CubicSmallDataFinite) {
  const Grid& g = square(32);
  WaveProblem p;
  p.damping = DampingCoefficient::uniform(g, 1.0).a;
  p.nl = Nonlinearity::cubic();
  EnsembleSpec spec;
  spec.norm = 0.1;
  const auto pairs = pair_ensemble(g, spec);
  SolverConfig cfg;
  cfg.T = 2.0;
  const LipschitzReport r = lipschitz_dependence(g, pairs[0].first, pairs[0].second, p, cfg);
  EXPECT_FALSE(r.unstable);
  EXPECT_TRUE(std::isfinite(r.D_hat));
  // Gronwall: D_hat <= exp(L T) for the rate fitted from the ratios themselves.
  double L = 0.0;
  for (std::size_t n = 1; n < r.ratios.size(); ++n) {
    const double t = n * (cfg.T / (r.ratios.size() - 1));
    L = std::max(L, std::log(r.ratios[n] / r.ratios[0]) / t);
  }
  EXPECT_LE(r.D_hat, r.ratios[0] * std::exp(L * cfg.T) * (1 + 1e-12));
}
