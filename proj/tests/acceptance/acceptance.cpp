// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include "fingersim/compliance.hpp"
#include "fingersim/equilibrium.hpp"
#include "fingersim/grasp_sim.hpp"
#include "fingersim/stiffness_id.hpp"
#include "fingersim_cli/cli.hpp"
#include "support/bundled.hpp"
#include "support/oracles.hpp"
#include "support/measured_matrices.hpp"

#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fingersim;

namespace {

// Pinned tolerances.
constexpr double kPowerPreKneeMaxForce = 3.0;   // N
constexpr double kPowerSlopeRatio = 2.0;
constexpr double kPinchMinRSquared = 0.999;
constexpr double kCurveRuntime = 5.0;           // s
constexpr double kAlignmentMaxDeg = 30.0;
constexpr int kAlignmentSamples = 50;
constexpr double kCenterLo = 55.0;              // mm past the distal joint
constexpr double kCenterHi = 65.0;
constexpr int kAlgebraTrials = 1000;
constexpr double kAlgebraTol = 1e-12;
constexpr int kOracleProblems = 100;
constexpr int kOracleGrid = 200;
constexpr double kClosedFormTol = 1e-8;         // rad
constexpr double kOracleRuntime = 30.0;         // s
constexpr double kEnergySlack = 10.0;           // multiples of the solver tolerance
constexpr double kNoiselessTol = 1e-10;         // N/mm
constexpr int kMonteCarloTrials = 200;
constexpr double kMonteCarloSigma = 0.02;       // N
constexpr double kMonteCarloHysteresis = 0.1;   // N
constexpr double kCoverageSe = 3.0;
constexpr double kCoverageRate = 0.95;
constexpr double kConditionOracleTol = 1e-6;
constexpr double kDeflectionTol = 1e-12;        // mm
constexpr double kHessianRelTol = 0.01;
constexpr double kHessianStep = 0.05;           // mm

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome power_grasp_phases() {
  const auto t0 = std::chrono::steady_clock::now();
  const ForceExcursionCurve c = simulate(testing::bundled("power_65mm"));
  const double runtime = seconds_since(t0);
  if (!c.knee_excursion) return {false, "no knee within the schedule"};
  const double knee = *c.knee_excursion;
  double pre_max = 0.0;
  std::vector<double> x1, y1, x2, y2;
  for (const CurveSample& s : c.samples) {
    if (s.excursion < knee) {
      pre_max = std::max(pre_max, s.force);
      if (s.force > 0.0) {
        x1.push_back(s.excursion);
        y1.push_back(s.force);
      }
    } else {
      x2.push_back(s.excursion);
      y2.push_back(s.force);
    }
  }
  const LineFit before = fit_line(x1, y1);
  const LineFit after = fit_line(x2, y2);
  const double ratio = after.slope / before.slope;
  const bool ok = pre_max < kPowerPreKneeMaxForce && before.slope > 0.0 &&
                  ratio >= kPowerSlopeRatio && runtime < kCurveRuntime;
  return {ok, fmt::format("knee {:.3f} mm, pre-knee max {:.3f} N (< {}), slopes {:.3f} -> {:.3f} "
                          "N/mm, ratio {:.1f} (>= {}), {:.2f} s (< {} s)",
                          knee, pre_max, kPowerPreKneeMaxForce, before.slope, after.slope, ratio,
                          kPowerSlopeRatio, runtime, kCurveRuntime)};
}

Outcome pinch_linearity() {
  const auto t0 = std::chrono::steady_clock::now();
  const ForceExcursionCurve c = simulate(testing::bundled("pinch_65mm"));
  const double runtime = seconds_since(t0);
  if (!c.knee_excursion || !c.limit_excursion) return {false, "touch or travel limit not reached"};
  std::vector<double> x1, y1, x2, y2;
  for (const CurveSample& s : c.samples) {
    if (s.excursion > *c.knee_excursion && s.excursion < *c.limit_excursion) {
      x1.push_back(s.excursion);
      y1.push_back(s.force);
    } else if (s.excursion > *c.limit_excursion) {
      x2.push_back(s.excursion);
      y2.push_back(s.force);
    }
  }
  const LineFit before = fit_line(x1, y1);
  const LineFit after = fit_line(x2, y2);
  const bool ok = before.r_squared >= kPinchMinRSquared && after.count >= 2 &&
                  after.slope > before.slope && runtime < kCurveRuntime;
  return {ok, fmt::format("touch {:.3f} mm, limit {:.3f} mm, pre-limit R^2 {:.6f} (>= {}) over {} "
                          "samples, slopes {:.3f} -> {:.3f} N/mm, {:.2f} s (< {} s)",
                          *c.knee_excursion, *c.limit_excursion, before.r_squared,
                          kPinchMinRSquared, before.count, before.slope, after.slope, runtime,
                          kCurveRuntime)};
}

Outcome principal_direction() {
  const FingerParams p;
  EquilibriumProblem pr;
  pr.params = p;
  const auto trajectory = closing_trajectory(pr, full_closing_range(p, kAlignmentSamples));
  const auto angles = principal_direction_alignment(p, trajectory);
  const double worst = *std::max_element(angles.begin(), angles.end());
  return {angles.size() == static_cast<std::size_t>(kAlignmentSamples) && worst <= kAlignmentMaxDeg,
          fmt::format("{} samples to theta_p = 90 deg, max angle {:.2f} deg (<= {})", angles.size(),
                      worst, kAlignmentMaxDeg)};
}

Outcome center_of_compliance_check() {
  const FingerParams p;
  const CenterOfCompliance c = center_of_compliance(p, FingerState::rest(p), 0.0, 120.0);
  const bool ok = c.unimodal && c.interior && c.location >= kCenterLo && c.location <= kCenterHi;
  return {ok, fmt::format("minimum at {:.2f} mm past the distal joint (in [{}, {}]), unique {}, "
                          "interior {}",
                          c.location, kCenterLo, kCenterHi, c.unimodal, c.interior)};
}

Outcome compliance_algebra() {
  testing::Rng rng(2024);
  double offset_err = 0.0, compose_err = 0.0;
  bool psd = true;
  for (int i = 0; i < kAlgebraTrials; ++i) {
    ComplianceMatrix c;
    c.matrix = testing::random_psd(rng);
    const Vec3 a = testing::random_vec3(rng, 100.0);
    const Vec3 b = testing::random_vec3(rng, 100.0);
    const ComplianceMatrix ta = transport(c, a);
    const Mat3 block = ta.xx();
    offset_err = std::max(offset_err, (offset_cartesian_compliance(c, a) - block).norm() /
                                          std::max(block.norm(), 1e-300));
    const ComplianceMatrix two = transport(ta, b);
    const ComplianceMatrix one = transport(c, a + b);
    compose_err = std::max(compose_err, (two.matrix - one.matrix).norm() / one.matrix.norm());
    try {
      ta.validate();
      two.validate();
    } catch (const ValidationError&) {
      psd = false;
    }
  }
  return {offset_err <= kAlgebraTol && compose_err <= kAlgebraTol && psd,
          fmt::format("{} random PSD matrices: offset-vs-transport {:.1e}, composition {:.1e} "
                      "(<= {:.0e}), PSD preserved {}",
                      kAlgebraTrials, offset_err, compose_err, kAlgebraTol, psd)};
}

Outcome equilibrium_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::Rng rng(77);
  int grid_ok = 0, with_obstacle = 0;
  for (int i = 0; i < kOracleProblems; ++i) {
    const testing::PlanarProblem pr = testing::random_planar_problem(rng);
    with_obstacle += pr.obstacle.has_value();
    const EquilibriumSolution s = solve_equilibrium(pr.to_problem());
    const testing::GridMinimum g = testing::grid_minimum(pr, kOracleGrid);
    const double es = testing::planar_energy(pr.params, s.state.theta_proximal, s.state.theta_distal);
    const bool near = std::abs(s.state.theta_proximal - g.theta_p) <= g.cell * (1 + 1e-9) &&
                      std::abs(s.state.theta_distal - g.theta_d) <= g.cell * (1 + 1e-9);
    const double slack = kEnergySlack * pr.to_problem().solver_tolerance * std::max(1.0, g.energy);
    grid_ok += near && es <= g.energy + slack;
  }
  double free_err = 0.0;
  for (int i = 0; i < kOracleProblems; ++i) {
    EquilibriumProblem pr;
    pr.params = testing::random_params(rng);
    pr.tendon_excursion = testing::uniform(rng, 0.0, 25.0);
    const testing::FreeSolution f = testing::free_closing_oracle(pr.params, pr.tendon_excursion);
    const EquilibriumSolution s = solve_equilibrium(pr);
    free_err = std::max({free_err, std::abs(s.state.theta_proximal - f.theta_p),
                         std::abs(s.state.theta_distal - f.theta_d)});
  }
  const double runtime = seconds_since(t0);
  const bool ok = grid_ok == kOracleProblems && free_err <= kClosedFormTol && runtime < kOracleRuntime;
  return {ok, fmt::format("grid {}x{}: {}/{} within one cell ({} with a contact), closed form max "
                          "error {:.1e} rad (<= {:.0e}), {:.2f} s (< {} s)",
                          kOracleGrid, kOracleGrid, grid_ok, kOracleProblems, with_obstacle,
                          free_err, kClosedFormTol, runtime, kOracleRuntime)};
}

Outcome stiffness_recovery() {
  const Eigen::MatrixXd k = testing::planar_grasp_stiffness();
  const StiffnessFit exact =
      fit_stiffness(synthesize_cycles(k, kMonteCarloHysteresis, 0.0, 5, 2.0, 1));
  const double noiseless = (exact.matrix - k).cwiseAbs().maxCoeff();
  int covered = 0;
  for (int t = 0; t < kMonteCarloTrials; ++t) {
    const StiffnessFit fit = fit_stiffness(
        synthesize_cycles(k, kMonteCarloHysteresis, kMonteCarloSigma, 5, 2.0, 5000 + t));
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      for (int j = i; j < 2; ++j) {
        ok = ok && std::abs(fit.matrix(i, j) - k(i, j)) <= kCoverageSe * fit.standard_errors(i, j);
      }
    }
    covered += ok;
  }
  const double rate = static_cast<double>(covered) / kMonteCarloTrials;
  return {noiseless <= kNoiselessTol && rate >= kCoverageRate,
          fmt::format("noiseless error {:.1e} N/mm (<= {:.0e}); {}/{} trials within {} SE "
                      "({:.1f}% >= {:.0f}%)",
                      noiseless, kNoiselessTol, covered, kMonteCarloTrials, kCoverageSe,
                      100 * rate, 100 * kCoverageRate)};
}

Outcome conditioning() {
  const ConditioningReport planar = conditioning_report(testing::planar_grasp_stiffness());
  const ConditioningReport spatial = conditioning_report(testing::spatial_grasp_stiffness());
  const Eigen::Vector2d e = testing::eigenvalues_2x2(testing::planar_grasp_stiffness());
  const double oracle = e[0] / e[1];
  const double err = std::abs(planar.condition_number - oracle);
  return {planar.well_conditioned && spatial.well_conditioned && err <= kConditionOracleTol,
          fmt::format("2x2 condition {:.4f} (oracle {:.4f}, diff {:.1e} <= {:.0e}), 3x3 condition "
                      "{:.4f}, both < {}",
                      planar.condition_number, oracle, err, kConditionOracleTol,
                      spatial.condition_number, kWellConditionedLimit)};
}

Outcome deflection() {
  const Deflection d =
      static_deflection(0.5 * Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.0, 0.981));
  const double err = std::abs(d.magnitude - 0.981 / 0.5);
  return {err <= kDeflectionTol && d.rounded_mm == 2,
          fmt::format("0.981 N on 0.5 N/mm -> {:.4f} mm (error {:.1e} <= {:.0e}), reported {} mm",
                      d.magnitude, err, kDeflectionTol, d.rounded_mm)};
}

Outcome hessian_consistency() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"pinch_65mm", "spherical_pinch_65mm"}) {
    const GraspScenario s = testing::bundled(name);
    const ForceExcursionCurve c = simulate(s);
    const double e = 0.5 * (*c.knee_excursion + *c.limit_excursion);
    const Eigen::MatrixXd k = grasp_stiffness(s, e).matrix;
    const int n = static_cast<int>(k.rows());
    Eigen::MatrixXd fd(n, n);
    const double h = kHessianStep;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Vec3 a = Vec3::Zero(), b = Vec3::Zero();
        a[i] = h;
        b[j] = h;
        fd(i, j) = (grasp_potential(s, e, a + b) - grasp_potential(s, e, a - b) -
                    grasp_potential(s, e, b - a) + grasp_potential(s, e, -a - b)) /
                   (4 * h * h);
      }
    }
    const double rel = (k - fd).norm() / fd.norm();
    ok = ok && rel <= kHessianRelTol;
    detail += fmt::format("{} at {:.3f} mm: {:.1e}; ", name, e, rel);
  }
  detail += fmt::format("tolerance {}; power_65mm has compliant segment contacts, outside the "
                        "fingertip-contact precondition of grasp_stiffness",
                        kHessianRelTol);
  return {ok, detail};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "fingersim_acceptance_repro";
  fs::remove_all(root);
  cli::RunConfig a;
  a.command = cli::Command::Repro;
  a.seed = 12345;
  a.out = root / "a";
  a.jobs = 4;
  cli::RunConfig b = a;
  b.out = root / "b";
  b.jobs = 1;
  const auto ma = cli::run(a);
  const auto mb = cli::run(b);
  int csv = 0, same = 0;
  for (std::size_t i = 0; i < ma.size() && i < mb.size(); ++i) {
    if (fs::path(ma[i].path).extension() != ".csv") continue;
    ++csv;
    same += testing::read_file((a.out / ma[i].path).string()) ==
            testing::read_file((b.out / mb[i].path).string());
  }
  fs::remove_all(root);
  return {csv >= 4 && same == csv && ma.size() == mb.size(),
          fmt::format("{}/{} CSV files byte-identical across two repro runs (seed {})", same, csv,
                      a.seed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"power grasp phases on a 65 mm cylinder", power_grasp_phases},
      {"pinch force linear until the travel limit", pinch_linearity},
      {"fingertip motion vs principal compliance direction", principal_direction},
      {"center of compliance along the distal link", center_of_compliance_check},
      {"compliance transport algebra", compliance_algebra},
      {"equilibrium vs grid search and closed form", equilibrium_oracles},
      {"stiffness identification recovery", stiffness_recovery},
      {"conditioning of the measured grasp matrices", conditioning},
      {"static deflection under a 100 g load", deflection},
      {"grasp stiffness vs finite-difference Hessian", hessian_consistency},
      {"repro determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    fmt::print("[{}] {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
