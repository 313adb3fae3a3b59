#include <benchmark/benchmark.h>

#include <cmath>

#include "gcl/ensemble.hpp"
#include "gcl/rays.hpp"
#include "gcl/region.hpp"
#include "gcl/wave.hpp"

using namespace gcl;

static void BM_TraceRay(benchmark::State& state) {
  const Grid g(Domain::rectangle(1.0, 1.0), 128);
  RayState r;
  r.x = Vec2(0.137, 0.642);
  r.p = Vec2(std::cos(0.4321), std::sin(0.4321));
  const double t_max = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(trace_ray(g, r, nullptr, t_max).reflections.size());
}
BENCHMARK(BM_TraceRay)->Arg(10)->Arg(100);

static void BM_CheckGcc(benchmark::State& state) {
  const Grid g(Domain::rectangle(1.0, 1.0), 128);
  const ControlRegion omega = preset(g, "omega2");
  for (auto _ : state) benchmark::DoNotOptimize(check_gcc(g, omega, 100.0).hits);
}
BENCHMARK(BM_CheckGcc)->Unit(benchmark::kMillisecond);

static void BM_WaveStep(benchmark::State& state) {
  const Grid g(Domain::rectangle(1.0, 1.0), static_cast<int>(state.range(0)));
  const Stencil st = build_stencil(g);
  const WaveField z = modal_ensemble(g, EnsembleSpec{}).front();
  WaveProblem p;
  p.damping = DampingCoefficient::indicator(g, preset(g, "omega2"), 2.0).a;
  p.nl = Nonlinearity::cubic();
  WaveStepper stepper(g, st, z.u, z.v, p, 0.5 * g.h());
  for (auto _ : state) stepper.advance();
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.node_count()));
}
BENCHMARK(BM_WaveStep)->Arg(64)->Arg(128)->Arg(256);

static void BM_FirstEigenvalue(benchmark::State& state) {
  const Grid g(Domain::rectangle(1.0, 1.0), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(first_dirichlet_eigenvalue(g));
}
BENCHMARK(BM_FirstEigenvalue)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
