// Serial vs OpenMP kernels.  Threads for the parallel variants come from the
// benchmark argument; results are checked for identity before timing.

#include <benchmark/benchmark.h>

#include <cstdlib>
#include <iostream>

#include "nonholo/sweep.hpp"

using namespace nonholo;

namespace {

StudyConfig study() {
  StudyConfig cfg;
  cfg.integrator.spec.kind = SchemeKind::Vni20;
  cfg.T = 0.5;
  cfg.eps = {0.02, 0.01, 0.005, 0.0025, 0.00125, 0.000625};
  cfg.x0 = StatePoint{Vec(3), Vec(3)};
  cfg.x0.q << 0.0, 1.0, 0.0;
  cfg.x0.v << 1.0, 1.0, 1.0;
  cfg.fiber = std::vector<int>{2};
  return cfg;
}

const MechanicalSystem& particle() {
  static const MechanicalSystem sys = nonholonomic_particle();
  return sys;
}

const std::vector<StatePoint>& samples() {
  static const std::vector<StatePoint> xs = [] {
    const auto split = derive_connection(particle(), Vec::Zero(3), std::vector<int>{2});
    return sample_on_distribution(particle(), split, Vec::Zero(3), 2.0, 20000, 7);
  }();
  return xs;
}

void BM_ConvergeSerial(benchmark::State& state) {
  const StudyConfig cfg = study();
  for (auto _ : state) benchmark::DoNotOptimize(converge_serial(particle(), cfg));
}

void BM_ConvergeParallel(benchmark::State& state) {
  const StudyConfig cfg = study();
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(converge_parallel(particle(), cfg, jobs));
}

void BM_TangencySerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(max_tangency_defect_serial(particle(), samples()));
}

void BM_TangencyParallel(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(max_tangency_defect_parallel(particle(), samples(), jobs));
}

bool identical_results() {
  const StudyConfig cfg = study();
  const bool converge =
      to_json(converge_serial(particle(), cfg), cfg) == to_json(converge_parallel(particle(), cfg, 4), cfg);
  const bool tangency = max_tangency_defect_serial(particle(), samples()) ==
                        max_tangency_defect_parallel(particle(), samples(), 4);
  return converge && tangency;
}

}  // namespace

BENCHMARK(BM_ConvergeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvergeParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TangencySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TangencyParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
  if (!identical_results()) {
    std::cerr << "serial and parallel results differ\n";
    return 1;
  }
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
