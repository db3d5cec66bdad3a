#include <memory>

#include <benchmark/benchmark.h>

#include <nlgrad/energy.hpp>
#include <nlgrad/operators.hpp>
#include <nlgrad/solve.hpp>

using namespace nlgrad;

namespace {

const KernelParams kKernel{2, 0.5, 0.25, 1.0, 0.5};

GridPtr grid_for(int divisor) { return Grid::build(BoxDomain::unit(2, 0.25), 0.25 / divisor); }

VectorFunction datum() {
  VectorFunction g = VectorFunction::identity(2);
  g[0] += 0.1 * ScalarFunction(term::Oscillation{1, 6.0, 0, 1});
  return g;
}

void BM_AssembleGradient(benchmark::State& state) {
  const auto grid = grid_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_gradient(grid, kKernel));
  state.counters["nodes"] = static_cast<double>(grid->num_nodes());
}

void BM_AssembleConvolution(benchmark::State& state) {
  const auto grid = grid_for(static_cast<int>(state.range(0)));
  const auto Q = build_Q_profile(kKernel);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_convolution(grid, Q));
}

void BM_ApplyGradient(benchmark::State& state) {
  const auto grid = grid_for(static_cast<int>(state.range(0)));
  const auto G = assemble_gradient(grid, kKernel);
  const Field u = sample_function(grid, datum());
  for (auto _ : state) benchmark::DoNotOptimize(apply_gradient_vec(G, u));
  state.counters["nnz"] = static_cast<double>(G.nonzeros());
}

void BM_EnergyGradient(benchmark::State& state) {
  const auto grid = grid_for(static_cast<int>(state.range(0)));
  const auto G = assemble_gradient(grid, kKernel);
  const auto W = StoredEnergy::poly_coercive();
  const Field u = sample_function(grid, datum());
  for (auto _ : state) benchmark::DoNotOptimize(eval_energy_gradient(u, G, W));
}

void BM_MinimizePoly(benchmark::State& state) {
  DirichletProblem p;
  p.op = std::make_shared<const NonlocalOperator>(assemble_gradient(grid_for(static_cast<int>(state.range(0))), kKernel));
  p.energy = StoredEnergy::poly_coercive();
  p.datum = datum();
  for (auto _ : state) benchmark::DoNotOptimize(minimize(p, {}));
}

}  // namespace

BENCHMARK(BM_AssembleGradient)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleConvolution)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyGradient)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnergyGradient)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MinimizePoly)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
