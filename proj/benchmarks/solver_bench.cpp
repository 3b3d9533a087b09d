#include "fingersim/compliance.hpp"
#include "fingersim/equilibrium.hpp"
#include "fingersim/grasp_sim.hpp"
#include "fingersim/scenario_io.hpp"
#include "fingersim/stiffness_id.hpp"

#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>
#include <string>

using namespace fingersim;

namespace {

GraspScenario load(const std::string& name) {
  std::ifstream in(std::string(FINGERSIM_SCENARIO_DIR) + "/" + name + ".json");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_grasp_scenario(ss.str());
}

void BM_FreeClosing(benchmark::State& state) {
  EquilibriumProblem pr;
  pr.tendon_excursion = 12.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(pr));
}
BENCHMARK(BM_FreeClosing);

void BM_ContactEquilibrium(benchmark::State& state) {
  EquilibriumProblem pr;
  pr.tendon_excursion = 20.0;
  Obstacle o;
  o.shape = HalfSpace{Vec3(0.0, 60.0, 0.0), Vec3(0.0, -1.0, 0.0)};
  pr.obstacles.push_back(o);
  for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(pr));
}
BENCHMARK(BM_ContactEquilibrium);

void BM_SimulateCurve(benchmark::State& state, const char* name) {
  const GraspScenario s = load(name);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(s));
}
BENCHMARK_CAPTURE(BM_SimulateCurve, power, "power_65mm")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SimulateCurve, pinch, "pinch_65mm")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SimulateCurve, spherical, "spherical_pinch_65mm")
    ->Unit(benchmark::kMillisecond);

void BM_Transport(benchmark::State& state) {
  const FingerParams p;
  const ComplianceMatrix c = joint_space_compliance(p, FingerState::rest(p), Vec3(120.0, 0.0, 0.0));
  const Vec3 d(10.0, -5.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(transport(c, d));
}
BENCHMARK(BM_Transport);

void BM_FitStiffness(benchmark::State& state) {
  Eigen::MatrixXd k(2, 2);
  k << 0.445, 0.0543, 0.0543, 0.409;
  const CycleDataset data = synthesize_cycles(k, 0.1, 0.02, static_cast<int>(state.range(0)), 2.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fit_stiffness(data));
}
BENCHMARK(BM_FitStiffness)->Arg(5)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
