// Serial versus OpenMP assembly of the step residual and Jacobian.

#include <benchmark/benchmark.h>

#include "nrflow/config.hpp"
#include "nrflow/residual.hpp"
#include "nrflow/scheme.hpp"

using namespace nrflow;

namespace {

struct Setup {
  Problem pb;
  StepContext ctx;
  Eigen::VectorXd x;
};

Setup make_setup(int nx, int ny) {
  RunConfig cfg = parse_config("");
  cfg.grid.dim = ny > 1 ? 2 : 1;
  cfg.grid.nx = nx;
  cfg.grid.ny = ny;
  cfg.initial.noise = 0.05;
  cfg.seed = 1;
  Problem pb = make_problem(cfg);
  const EntropyState st = initial_state(pb, make_initial_fields(cfg, pb));
  StepContext ctx = StepContext::make(pb, st);
  Eigen::VectorXd x = pack_unknowns(st);
  return {std::move(pb), std::move(ctx), std::move(x)};
}

const Setup& setup_for(int nx, int ny) {
  static const Setup one = make_setup(4000, 1);
  static const Setup two = make_setup(64, 64);
  return ny > 1 ? two : one;
}

template <Exec ex>
void BM_Residual(benchmark::State& state) {
  const Setup& s = setup_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(residual(s.pb, s.ctx, s.x, 1.0, ex));
  state.SetItemsProcessed(state.iterations() * s.pb.num_cells());
}

template <Exec ex>
void BM_Jacobian(benchmark::State& state) {
  const Setup& s = setup_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(jacobian(s.pb, s.ctx, s.x, 1.0, ex));
  state.SetItemsProcessed(state.iterations() * s.pb.num_cells());
}

}  // namespace

BENCHMARK(BM_Residual<Exec::Serial>)->Args({4000, 1})->Args({64, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Residual<Exec::Parallel>)->Args({4000, 1})->Args({64, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jacobian<Exec::Serial>)->Args({4000, 1})->Args({64, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jacobian<Exec::Parallel>)->Args({4000, 1})->Args({64, 64})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
