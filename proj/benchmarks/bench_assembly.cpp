// Microbenchmarks for the hot paths of a transient solve: local kit
// construction, residual/Jacobian assembly, and a full Newton step.

#include <benchmark/benchmark.h>

#include "hyns/mms.hpp"
#include "hyns/solver.hpp"

using namespace hyns;

namespace {

struct Setup {
  Mesh mesh;
  Spaces spaces;
  std::vector<LocalKit> kits;

  Setup(int n, int k)
      : mesh(build_structured_mesh(n)), spaces(mesh, k), kits(build_kits(spaces)) {}
};

}  // namespace

static void BM_BuildKits(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const Mesh mesh = build_structured_mesh(n);
  const Spaces spaces(mesh, k);
  for (auto _ : state) {
    auto kits = build_kits(spaces);
    benchmark::DoNotOptimize(kits);
  }
  state.SetItemsProcessed(state.iterations() * mesh.n_elements());
}
BENCHMARK(BM_BuildKits)->Args({8, 0})->Args({8, 1})->Args({8, 2})->Unit(benchmark::kMillisecond);

static void BM_AssembleSystem(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  Setup s(n, k);
  SchemeConfig config;
  config.k = k;
  config.nu = 1e-2;
  NavierStokesSolver solver(s.spaces, s.kits, config);
  MmsSolution exact{config.nu};
  TransientState st = solver.initial_state(exact.velocity_at(0.0));
  StepData sd = solver.make_step_data(st, 0.01, exact.forcing_field());
  Eigen::VectorXd X = solver.pack(st.u, st.p);
  sd.beta = solver.beta_snapshot(sd, X);
  Eigen::VectorXd R;
  for (auto _ : state) {
    const auto& J = solver.assemble_system(sd, X, R);
    benchmark::DoNotOptimize(J.valuePtr());
  }
  state.SetItemsProcessed(state.iterations() * s.mesh.n_elements());
}
BENCHMARK(BM_AssembleSystem)->Args({8, 1})->Args({16, 1})->Args({8, 2})
    ->Unit(benchmark::kMillisecond);

static void BM_TimeStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  Setup s(n, k);
  SchemeConfig config;
  config.k = k;
  config.nu = 1e-2;
  NavierStokesSolver solver(s.spaces, s.kits, config);
  MmsSolution exact{config.nu};
  TransientState st = solver.initial_state(exact.velocity_at(0.0));
  for (auto _ : state) {
    TransientState next = solver.step(st, 0.01, exact.forcing_field());
    benchmark::DoNotOptimize(next.newton_iters);
  }
}
BENCHMARK(BM_TimeStep)->Args({8, 1})->Args({16, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
