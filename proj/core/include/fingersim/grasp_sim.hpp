#pragma once

#include "fingersim/equilibrium.hpp"
#include "fingersim/finger_model.hpp"
#include "fingersim/obstacles.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace fingersim {

enum class GraspType { OpposedPinch, SphericalPinch, PowerCylinder };
enum class ObjectKind { Cylinder, Sphere };

const char* to_string(GraspType type);
const char* to_string(ObjectKind kind);

// Finger base frame in world coordinates: x along the straight finger, y the flexion side.
struct FingerBase {
  Vec3 position = Vec3::Zero();
  Vec3 x_axis = Vec3::UnitX();
  Vec3 y_axis = Vec3::UnitY();

  Mat3 rotation() const;  // columns x, y, x cross y
  bool operator==(const FingerBase&) const = default;
};

struct FingerSpec {
  FingerBase base;
  FingerParams params;
  bool operator==(const FingerSpec&) const = default;
};

struct GraspObject {
  ObjectKind kind = ObjectKind::Cylinder;
  double width = 65.0;  // mm, diameter
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // cylinders only
  Vec3 split_normal = Vec3::UnitX();
  // N/mm; zero is a rigid contact.
  double contact_stiffness = 0.0;

  double radius() const { return 0.5 * width; }
  bool operator==(const GraspObject&) const = default;
};

struct SolverSettings {
  double tolerance = 1e-8;
  int max_iterations = 500;
  bool operator==(const SolverSettings&) const = default;
};

struct GraspScenario {
  GraspType grasp_type = GraspType::OpposedPinch;
  std::vector<FingerSpec> fingers;
  GraspObject object;
  std::vector<double> excursion_schedule;
  SolverSettings solver;

  void validate() const;
  bool operator==(const GraspScenario&) const = default;
};

// Links that may touch the object: both segments for power grasps, the fingertip for pinches.
std::vector<Link> contact_links(GraspType type);

// Equilibrium problem of one finger, object expressed in that finger's base frame.
EquilibriumProblem finger_problem(const GraspScenario& scenario, std::size_t finger,
                                  double excursion, const Vec3& object_offset = Vec3::Zero());

struct GraspState {
  std::vector<EquilibriumSolution> fingers;
  double internal_force = 0.0;  // N
  Vec3 net_force = Vec3::Zero();  // N, force of all fingers on the object
  double energy = 0.0;  // N*mm
  Phase phase = Phase::Sweep;
  bool limit_engaged = false;
};

// All fingers at one excursion with the object displaced by object_offset (world, mm).
GraspState solve_grasp(const GraspScenario& scenario, double excursion,
                       const Vec3& object_offset = Vec3::Zero(),
                       const std::vector<Vec4>* warm_start = nullptr);

struct CurveSample {
  double excursion = 0.0;  // mm
  double force = 0.0;      // N
  Phase phase = Phase::Sweep;
  bool limit_engaged = false;
};

struct ForceExcursionCurve {
  GraspType grasp_type = GraspType::PowerCylinder;
  std::vector<CurveSample> samples;
  // Excursion where the grasp becomes Closed, located by bisection.
  std::optional<double> knee_excursion;
  // Excursion where a distal link reaches its travel limit.
  std::optional<double> limit_excursion;
};

ForceExcursionCurve simulate_power_grasp(const GraspScenario& scenario);
ForceExcursionCurve simulate_pinch_grasp(const GraspScenario& scenario);
ForceExcursionCurve simulate(const GraspScenario& scenario);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t count = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct GraspStiffness {
  Eigen::MatrixXd matrix;  // N/mm, 2x2 in the grasp plane or 3x3 spatial
  GraspType grasp_type = GraspType::OpposedPinch;
};

// Object translational stiffness of a pinch at a given excursion (rigid fingertip contacts).
GraspStiffness grasp_stiffness(const GraspScenario& scenario, double excursion);

// Rows of the world directions the stiffness matrix refers to (x, y[, z]).
int stiffness_dimension(GraspType type);

struct ProbeResult {
  Vec3 direction = Vec3::Zero();
  double escape_work = 0.0;       // N*mm
  double break_displacement = 0.0;  // mm
  bool capped = false;
};

struct EnergyWell {
  Vec3 object_center = Vec3::Zero();
  Eigen::MatrixXd hessian;  // N/mm
  Vec3 holding_force = Vec3::Zero();  // N, external load balancing the fingers
  std::vector<ProbeResult> probes;
  double min_escape_work = 0.0;
};

// 16 in-plane directions, plus +-z for spherical grasps.
std::vector<Vec3> default_probe_directions(GraspType type);

// Work is the finger energy increase minus the work of the constant holding load.
EnergyWell energy_well(const GraspScenario& scenario, double excursion,
                       const std::vector<Vec3>& probe_directions, double displacement_cap);

// Finger energy plus holding-load potential at an object offset, for finite-difference checks.
double grasp_potential(const GraspScenario& scenario, double excursion, const Vec3& object_offset);

struct Deflection {
  Eigen::VectorXd displacement;  // mm
  double magnitude = 0.0;        // mm
  long rounded_mm = 0;
};

Deflection static_deflection(const Eigen::MatrixXd& stiffness, const Eigen::VectorXd& force);

}  // namespace fingersim
