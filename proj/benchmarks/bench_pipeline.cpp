#include <benchmark/benchmark.h>

#include "robin/balancing.hpp"
#include "robin/experiments.hpp"

using namespace robin;

namespace {

void BM_AssembleStiffness(benchmark::State& state) {
  const auto nx = static_cast<int>(state.range(0));
  const Mesh mesh = build_rectangle_mesh(nx, nx / 2);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_interior(mesh));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(mesh.num_vertices()));
}
BENCHMARK(BM_AssembleStiffness)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_FactorizeMixedBvp(benchmark::State& state) {
  const auto nx = static_cast<int>(state.range(0));
  const Mesh mesh = build_rectangle_mesh(nx, nx / 2);
  for (auto _ : state) {
    const MixedBvpSolver solver(mesh, 0.999);
    benchmark::DoNotOptimize(&solver);
  }
  state.SetComplexityN(static_cast<benchmark::IterationCount>(mesh.num_vertices()));
}
BENCHMARK(BM_FactorizeMixedBvp)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_AssembleGalerkinOperator(benchmark::State& state) {
  const Mesh mesh = build_rectangle_mesh(128, 64);
  const DomainSpec domain = rectangle_domain(0.999);
  const MixedBvpSolver solver(mesh, domain.gamma);
  const NodalField u = solver.solve(assemble_flux_load(mesh, domain.flux));
  const ThetaBasis basis = make_sine_basis(static_cast<int>(state.range(0)), mesh.gamma_i.length());
  for (auto _ : state) benchmark::DoNotOptimize(assemble_operator(solver, domain, u, basis));
}
BENCHMARK(BM_AssembleGalerkinOperator)->Arg(10)->Arg(20)->Arg(40);

void BM_BalancingSelection(benchmark::State& state) {
  const ExperimentSpec spec = default_spec(1);
  const Mesh mesh = build_rectangle_mesh(spec.mesh_along, spec.mesh_across);
  const DomainSpec domain = rectangle_domain(spec.gamma);
  const MixedBvpSolver solver(mesh, domain.gamma);
  const NodalField u = solver.solve(assemble_flux_load(mesh, domain.flux));
  const GalerkinSystem sys = assemble_operator(solver, domain, u, make_sine_basis(spec.n, mesh.gamma_i.length()));
  const ThetaField theta = ground_truth_theta(spec, mesh.gamma_i.arclength, mesh.gamma_i.length());
  const BoundaryField data = add_noise(trace(solve_sensitivity(solver, domain, u, theta), BoundaryTag::A), spec.delta, 1);
  const Eigen::VectorXd rhs = assemble_rhs(sys, data);
  for (auto _ : state) benchmark::DoNotOptimize(select_alpha_plus(spec.balancing_config(), sys, rhs));
}
BENCHMARK(BM_BalancingSelection);

void BM_RunExperiment(benchmark::State& state) {
  const ExperimentSpec spec = default_spec(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec));
}
BENCHMARK(BM_RunExperiment)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
