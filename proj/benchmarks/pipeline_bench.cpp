#include <benchmark/benchmark.h>

#include "rfa/bioheat.hpp"
#include "rfa/electrode.hpp"
#include "rfa/electrostatics.hpp"
#include "rfa/metrics.hpp"
#include "rfa/necrosis.hpp"
#include "rfa/simulator.hpp"

namespace rfa {
namespace {

struct LiverSetup {
  SimulationRequest req = liver_validation_request();
  MaterialFields fields = assign_materials(req.labels, req.table);
  Mask electrode = rasterize(req.pose, req.labels.spec());
  PotentialProblem problem = grounded_electrode_problem(fields.sigma, electrode, req.pose.v_applied);
  ScalarVolume q_r = heat_source(solve_potential(problem).potential, fields.sigma);
};

const LiverSetup& liver() {
  static const LiverSetup s;
  return s;
}

void BM_PotentialSolve(benchmark::State& state) {
  const auto& s = liver();
  int iterations = 0;
  for (auto _ : state) {
    const auto sol = solve_potential(s.problem);
    iterations = sol.iterations;
    benchmark::DoNotOptimize(sol.potential.values().data());
  }
  state.counters["cg_iterations"] = iterations;
}
BENCHMARK(BM_PotentialSolve)->Unit(benchmark::kMillisecond);

void BM_BioheatStep(benchmark::State& state) {
  const auto& s = liver();
  const BioheatStepper stepper(s.fields, s.q_r, s.req.bioheat);
  ScalarVolume a(s.q_r.spec(), s.req.bioheat.t_init), b(s.q_r.spec());
  for (auto _ : state) {
    stepper.advance(a, b);
    std::swap(a, b);
    benchmark::DoNotOptimize(a.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_BioheatStep)->Unit(benchmark::kMicrosecond);

void BM_DamageStep(benchmark::State& state) {
  const auto& s = liver();
  ScalarVolume psi(s.q_r.spec()), temp(s.q_r.spec(), 65.0);
  for (auto _ : state) {
    accumulate_inplace(psi, temp, s.req.bioheat.dt, s.req.arrhenius, 0);
    benchmark::DoNotOptimize(psi.values().data());
  }
}
BENCHMARK(BM_DamageStep)->Unit(benchmark::kMicrosecond);

void BM_Hausdorff(benchmark::State& state) {
  const auto lesion = run(liver().req).lesion;
  Mask shifted(lesion.spec());
  const GridSpec& g = lesion.spec();
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 1; i < g.dims[0]; ++i) shifted(i, j, k) = lesion(i - 1, j, k);
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(lesion, shifted));
}
BENCHMARK(BM_Hausdorff)->Unit(benchmark::kMillisecond);

void BM_FullPipeline(benchmark::State& state) {
  const auto req = liver_validation_request();
  for (auto _ : state) {
    const auto res = run(req);
    benchmark::DoNotOptimize(res.lesion.values().data());
  }
}
BENCHMARK(BM_FullPipeline)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
}  // namespace rfa

BENCHMARK_MAIN();
