#include <benchmark/benchmark.h>

#include <vector>

#include "mixbddc/bddc.hpp"
#include "mixbddc/io.hpp"

using namespace mixbddc;

namespace {

// 60 x 220 smooth log-normal field on the 6 x 22 partition
struct Problem {
  Problem()
      : grid(2, {60, 220, 1}, {1.0, 1.0, 1.0}),
        dec(regular_partition(grid, std::vector<int>{6, 22})),
        sys(rescale(assemble_system(grid, field()), dec)) {}
  static Permeability field() {
    FieldParams p;
    p.kind = FieldKind::Smooth;
    p.seed = 1;
    return synthetic_field(2, {60, 220, 1}, p).perm;
  }
  Grid grid;
  Decomposition dec;
  SaddleSystem sys;
};

const Problem& problem() {
  static const Problem p;
  return p;
}

SolveConfig config(Execution exec, ConstraintMode mode) {
  SolveConfig c;
  c.exec = exec;
  c.constraints = mode;
  c.tau = 10.0;
  return c;
}

Execution exec_of(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_SetupInitial(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) {
    BddcSetup s(p.sys, p.dec, config(exec_of(state), ConstraintMode::Initial));
    benchmark::DoNotOptimize(s.coarse.get());
  }
}

void BM_SetupAdaptive(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) {
    BddcSetup s(p.sys, p.dec, config(exec_of(state), ConstraintMode::Adaptive));
    benchmark::DoNotOptimize(s.coarse.get());
  }
}

void BM_OperatorApply(benchmark::State& state) {
  const Problem& p = problem();
  const BddcSetup s(p.sys, p.dec, config(exec_of(state), ConstraintMode::Initial));
  const Eigen::VectorXd v = Eigen::VectorXd::Random(p.dec.num_interface_dofs());
  for (auto _ : state) benchmark::DoNotOptimize(s.op->apply(v));
}

void BM_PreconditionerApply(benchmark::State& state) {
  const Problem& p = problem();
  const BddcSetup s(p.sys, p.dec, config(exec_of(state), ConstraintMode::Initial));
  const Eigen::VectorXd v = s.balance->project(Eigen::VectorXd::Random(p.dec.num_interface_dofs()));
  for (auto _ : state) benchmark::DoNotOptimize(s.precond->apply(v));
}

}  // namespace

// argument 0 is the serial reference path, 1 the OpenMP path
BENCHMARK(BM_SetupInitial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SetupAdaptive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OperatorApply)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PreconditionerApply)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
