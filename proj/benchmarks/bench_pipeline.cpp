// Timings for the pipeline stages on the chemical-process example.

#include <benchmark/benchmark.h>

#include "cpsimpact/attacks.hpp"
#include "cpsimpact/distrib.hpp"
#include "cpsimpact/numcore.hpp"
#include "cpsimpact/solver.hpp"
#include "cpsimpact/sysmodel.hpp"

namespace {

using namespace cpsimpact;

SystemModel chemical() {
  PlantModel p;
  p.A.resize(3, 3);
  p.A << 0.96, 0, 0, 0.04, 0.97, 0, -0.04, 0, 0.90;
  p.B.resize(3, 4);
  p.B << 8.8, -2.3, 0, 0, 0.20, 2.2, 4.9, 0, -0.21, -2.2, 1.9, 21;
  p.C = Matrix::Identity(3, 3);
  p.Sigma_v = 0.05 * Matrix::Identity(3, 3);
  p.Sigma_w = 0.01 * Matrix::Identity(3, 3);
  ControllerModel c;
  c.L_xhat.resize(4, 3);
  c.L_xhat << 10, 1.8, -0.1, -2.0, 7.1, -0.5, 1.4, 16, 0.2, -0.4, -0.7, 4.2;
  c.L_xhat *= 0.01;
  c.L_yr.resize(4, 3);
  c.L_yr << 11, 11, 0, -1, 44, 0, 0, 0, 0, 0, 4.7, 4.7;
  c.L_yr *= 0.01;
  c.Q_yr = 0.4 * Matrix::Identity(3, 3);
  Matrix Q(1, 6);
  Q << 0, 0, 1.0 / 3.0, 0, 0, 0;
  return make_system(p, c, Q);
}

StrategySpec spec(StrategyKind kind) {
  StrategySpec s;
  s.kind = kind;
  s.resources = ResourceSet{{1}, {1, 2}};
  return s;
}

void BM_Dare(benchmark::State& state) {
  const auto sys = chemical();
  const auto& p = sys.plant;
  for (auto _ : state) benchmark::DoNotOptimize(numcore::solve_dare(p.A, p.C, p.Sigma_v, p.Sigma_w));
}
BENCHMARK(BM_Dare);

void BM_StackDynamics(benchmark::State& state) {
  const auto sys = chemical();
  const auto nom = assemble_nominal(sys);
  const Index N = state.range(0);
  const auto att = build_attack(spec(StrategyKind::ReplayDos), sys, nom, N);
  const auto ext = assemble_extended(sys, att.channels);
  for (auto _ : state) benchmark::DoNotOptimize(stack_dynamics(ext, att, nom, sys.Q_z, N));
}
BENCHMARK(BM_StackDynamics)->Arg(10)->Arg(50);

void BM_Algorithm1(benchmark::State& state) {
  const auto sys = chemical();
  const auto nom = assemble_nominal(sys);
  const auto law = stationary_law(nom);
  const Index N = state.range(0);
  const auto kind = static_cast<StrategyKind>(state.range(1));
  const auto att = build_attack(spec(kind), sys, nom, N);
  const auto layout = decision_layout(att, N, sys.controller.Q_yr);
  const auto summary = analyze(sys, nom, law, att, layout, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(algorithm1(summary, layout));
}
BENCHMARK(BM_Algorithm1)
    ->Args({10, static_cast<int>(StrategyKind::FDI)})
    ->Args({10, static_cast<int>(StrategyKind::BiasInjection)})
    ->Args({10, static_cast<int>(StrategyKind::ReplayDos)})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
