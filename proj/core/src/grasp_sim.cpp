#include "fingersim/grasp_sim.hpp"

#include "fingersim/compliance.hpp"
#include "fingersim/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fingersim {

namespace {

constexpr double kBisectionTolerance = 1e-6;  // mm

void require_finite(const Vec3& v, const std::string& field) {
  if (!v.allFinite()) throw ValidationError(field, "must be finite");
}

void require_direction(const Vec3& v, const std::string& field) {
  require_finite(v, field);
  if (!(v.norm() > 0.0)) throw ValidationError(field, "must be a nonzero vector");
}

Phase max_phase(Phase a, Phase b) {
  return static_cast<int>(a) >= static_cast<int>(b) ? a : b;
}

std::vector<Vec4> coordinates(const GraspState& s) {
  std::vector<Vec4> out;
  for (const auto& f : s.fingers) out.push_back(f.state.q());
  return out;
}

const ContactRecord* loaded_fingertip(const EquilibriumSolution& s) {
  const ContactRecord* found = nullptr;
  for (const ContactRecord& c : s.state.contacts) {
    if (c.link == Link::Fingertip && c.normal_force > 0.0) found = &c;
  }
  return found;
}

bool all_fingertips_loaded(const GraspState& s) {
  return std::all_of(s.fingers.begin(), s.fingers.end(),
                     [](const EquilibriumSolution& f) { return loaded_fingertip(f) != nullptr; });
}

// Solve the whole schedule, warm-starting each sample from the previous one.
std::vector<GraspState> sweep(const GraspScenario& scenario) {
  std::vector<GraspState> out;
  out.reserve(scenario.excursion_schedule.size());
  for (std::size_t i = 0; i < scenario.excursion_schedule.size(); ++i) {
    const std::vector<Vec4> warm = out.empty() ? std::vector<Vec4>{} : coordinates(out.back());
    try {
      out.push_back(solve_grasp(scenario, scenario.excursion_schedule[i], Vec3::Zero(),
                                out.empty() ? nullptr : &warm));
    } catch (const NonConvergence& e) {
      throw NonConvergence(e.what(), i);
    } catch (const InfeasibleGeometry& e) {
      throw InfeasibleGeometry(std::string(e.what()) + " (sample " + std::to_string(i) + ")");
    }
  }
  return out;
}

template <typename Predicate>
std::optional<double> locate_transition(const GraspScenario& scenario,
                                        const std::vector<GraspState>& states, Predicate pred) {
  const auto& e = scenario.excursion_schedule;
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (pred(states[i - 1]) || !pred(states[i])) continue;
    double lo = e[i - 1];
    double hi = e[i];
    const std::vector<Vec4> warm = coordinates(states[i - 1]);
    while (hi - lo > kBisectionTolerance) {
      const double mid = 0.5 * (lo + hi);
      if (pred(solve_grasp(scenario, mid, Vec3::Zero(), &warm))) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

ForceExcursionCurve build_curve(const GraspScenario& scenario) {
  const std::vector<GraspState> states = sweep(scenario);
  ForceExcursionCurve curve;
  curve.grasp_type = scenario.grasp_type;
  for (std::size_t i = 0; i < states.size(); ++i) {
    curve.samples.push_back({scenario.excursion_schedule[i], states[i].internal_force,
                             states[i].phase, states[i].limit_engaged});
  }
  curve.knee_excursion = locate_transition(
      scenario, states, [](const GraspState& s) { return s.phase == Phase::Closed; });
  curve.limit_excursion =
      locate_transition(scenario, states, [](const GraspState& s) { return s.limit_engaged; });
  return curve;
}

Mat3 projector(const GraspObject& object, const Mat3& rotation) {
  if (object.kind == ObjectKind::Sphere) return Mat3::Identity();
  const Vec3 a = (rotation.transpose() * object.axis).normalized();
  return Mat3::Identity() - a * a.transpose();
}

// Stiffness of the object against one finger, in that finger's base frame.
Mat3 finger_contact_stiffness(const GraspScenario& scenario, std::size_t index,
                              const EquilibriumSolution& sol) {
  const FingerSpec& finger = scenario.fingers[index];
  const FingerParams& params = finger.params;
  const ContactRecord* contact = loaded_fingertip(sol);
  if (contact == nullptr) {
    throw ValidationError("fingers[" + std::to_string(index) + "]",
                          "not in fingertip contact at the requested excursion");
  }
  const Vec4 q = sol.state.q();
  const EquilibriumProblem problem = finger_problem(scenario, index, sol.state.tendon_excursion);
  const ContactGeometry geom = contact_geometry(params, q, problem.obstacles.front()).front();

  const double mu = contact->normal_force;
  const double radius = scenario.object.radius();
  const Vec3 n = geom.normal;
  const Mat3 p = projector(scenario.object, finger.base.rotation()) - n * n.transpose();

  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(kNumCoords, kNumCoords);
  if (sol.state.tendon_tension > 0.0) {
    z = constraint_null_space(tendon_jacobian(params).transpose());
  }
  const Mat4 lagrangian = energy_hessian(params, q) - mu * geom.hessian;
  const Eigen::MatrixXd a = z.transpose() * lagrangian * z;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw SingularConfiguration("finger " + std::to_string(index) +
                                " has a singular reduced stiffness at the contact");
  }
  const PointDerivatives tip =
      point_derivatives(params, q, Link::Distal, Vec3(params.distal_length, 0.0, 0.0));
  const Eigen::MatrixXd g = tip.jacobian * z;
  const Mat3 c = g * lu.solve(g.transpose());
  const double cn = n.dot(c * n);
  if (!(std::abs(cn) > 1e-12 * std::max(1.0, c.norm()))) {
    throw SingularConfiguration("fingertip compliance of finger " + std::to_string(index) +
                                " is singular along its contact normal");
  }
  const double curvature = mu / radius;
  const Eigen::RowVector3d dmu = (n.transpose() + curvature * n.transpose() * c * p) / cn;
  return n * dmu + curvature * p * (c * n * dmu - curvature * c * p - Mat3::Identity());
}

}  // namespace

const char* to_string(GraspType type) {
  switch (type) {
    case GraspType::OpposedPinch: return "OpposedPinch";
    case GraspType::SphericalPinch: return "SphericalPinch";
    case GraspType::PowerCylinder: return "PowerCylinder";
  }
  return "?";
}

const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Cylinder: return "cylinder";
    case ObjectKind::Sphere: return "sphere";
  }
  return "?";
}

Mat3 FingerBase::rotation() const {
  Mat3 r;
  r.col(0) = x_axis.normalized();
  r.col(1) = y_axis.normalized();
  r.col(2) = r.col(0).cross(r.col(1));
  return r;
}

void GraspScenario::validate() const {
  if (fingers.size() < 2) throw ValidationError("fingers", "at least 2 fingers are required");
  for (std::size_t i = 0; i < fingers.size(); ++i) {
    const std::string prefix = "fingers[" + std::to_string(i) + "]";
    fingers[i].params.validate(prefix + ".params");
    const FingerBase& b = fingers[i].base;
    require_finite(b.position, prefix + ".base.position");
    require_direction(b.x_axis, prefix + ".base.x_axis");
    require_direction(b.y_axis, prefix + ".base.y_axis");
    if (std::abs(b.x_axis.normalized().dot(b.y_axis.normalized())) > 1e-9) {
      throw ValidationError(prefix + ".base.y_axis", "must be orthogonal to x_axis");
    }
  }
  if (!(object.width > 0.0) || !std::isfinite(object.width)) {
    throw ValidationError("object.width", "must be a finite positive number");
  }
  require_finite(object.center, "object.center");
  require_direction(object.split_normal, "object.split_normal");
  if (object.kind == ObjectKind::Cylinder) require_direction(object.axis, "object.axis");
  if (!(object.contact_stiffness >= 0.0) || !std::isfinite(object.contact_stiffness)) {
    throw ValidationError("object.contact_stiffness", "must be finite and >= 0");
  }
  for (std::size_t i = 0; i < excursion_schedule.size(); ++i) {
    const std::string field = "excursion_schedule[" + std::to_string(i) + "]";
    if (!std::isfinite(excursion_schedule[i])) throw ValidationError(field, "must be finite");
    if (i > 0 && !(excursion_schedule[i] > excursion_schedule[i - 1])) {
      throw ValidationError(field, "schedule must be strictly increasing");
    }
  }
  if (!(solver.tolerance > 0.0)) throw ValidationError("solver.tolerance", "must be > 0");
  if (solver.max_iterations <= 0) throw ValidationError("solver.max_iterations", "must be > 0");

  switch (grasp_type) {
    case GraspType::OpposedPinch: {
      if (fingers.size() != 2) {
        throw ValidationError("fingers", "an opposed pinch uses exactly 2 fingers");
      }
      const Mat3 r0 = fingers[0].base.rotation();
      const Mat3 r1 = fingers[1].base.rotation();
      // Planar stiffness is reported in world x-y, so the fingers must work in that plane.
      for (int i = 0; i < 2; ++i) {
        const Mat3 r = i == 0 ? r0 : r1;
        if (std::abs(std::abs(r.col(2).z()) - 1.0) > 1e-9 ||
            std::abs(fingers[i].base.position.z() - object.center.z()) > 1e-9) {
          throw ValidationError("fingers[" + std::to_string(i) + "].base",
                                "opposed pinch fingers must lie in the object's x-y plane");
        }
      }
      if (!(r0.col(1).dot(r1.col(1)) < 0.0)) {
        throw ValidationError("fingers", "opposed pinch fingers must flex toward each other");
      }
      break;
    }
    case GraspType::SphericalPinch: {
      if (fingers.size() != 3) {
        throw ValidationError("fingers", "a spherical pinch uses exactly 3 fingers");
      }
      Vec3 centroid = Vec3::Zero();
      for (const auto& f : fingers) centroid += f.base.position / 3.0;
      Vec3 normal = Vec3::Zero();
      for (const auto& f : fingers) normal += f.base.rotation().col(0);
      if (!(normal.norm() > 0.0)) {
        throw ValidationError("fingers", "spherical pinch fingers must point the same way");
      }
      normal.normalize();
      std::array<Vec3, 3> spokes;
      for (int i = 0; i < 3; ++i) {
        const Vec3 v = fingers[i].base.position - centroid;
        spokes[i] = v - normal * normal.dot(v);
        if (!(fingers[i].base.rotation().col(1).dot(-spokes[i]) > 0.0)) {
          throw ValidationError("fingers[" + std::to_string(i) + "].base.y_axis",
                                "spherical pinch fingers must flex toward the center");
        }
      }
      for (int i = 0; i < 3; ++i) {
        const Vec3& a = spokes[i];
        const Vec3& b = spokes[(i + 1) % 3];
        const double angle = std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
        if (std::abs(angle - 2.0 * std::numbers::pi / 3.0) > std::numbers::pi / 180.0 ||
            std::abs(a.norm() - b.norm()) > 0.01 * std::max(a.norm(), b.norm())) {
          throw ValidationError("fingers", "spherical pinch fingers must sit at 120 degrees");
        }
      }
      break;
    }
    case GraspType::PowerCylinder:
      if (object.kind != ObjectKind::Cylinder) {
        throw ValidationError("object.kind", "a power grasp holds a cylinder");
      }
      break;
  }
}

std::vector<Link> contact_links(GraspType type) {
  if (type == GraspType::PowerCylinder) return {Link::Proximal, Link::Distal};
  return {Link::Fingertip};
}

EquilibriumProblem finger_problem(const GraspScenario& scenario, std::size_t finger,
                                  double excursion, const Vec3& object_offset) {
  const FingerSpec& spec = scenario.fingers.at(finger);
  const Mat3 r = spec.base.rotation();
  EquilibriumProblem p;
  p.params = spec.params;
  p.tendon_excursion = excursion;
  p.solver_tolerance = scenario.solver.tolerance;
  p.max_iterations = scenario.solver.max_iterations;

  RoundObstacle round;
  round.center = r.transpose() * (scenario.object.center + object_offset - spec.base.position);
  round.radius = scenario.object.radius();
  if (scenario.object.kind == ObjectKind::Cylinder) {
    round.axis = r.transpose() * scenario.object.axis.normalized();
  } else {
    round.axis.reset();
  }
  for (Link link : contact_links(scenario.grasp_type)) {
    Obstacle ob;
    ob.shape = round;
    ob.link = link;
    ob.contact_stiffness = scenario.object.contact_stiffness;
    p.obstacles.push_back(ob);
  }
  return p;
}

GraspState solve_grasp(const GraspScenario& scenario, double excursion, const Vec3& object_offset,
                       const std::vector<Vec4>* warm_start) {
  GraspState out;
  const Vec3 center = scenario.object.center + object_offset;
  const Vec3 split = scenario.object.split_normal.normalized();
  for (std::size_t i = 0; i < scenario.fingers.size(); ++i) {
    const FingerSpec& spec = scenario.fingers[i];
    std::optional<Vec4> start;
    if (warm_start != nullptr && i < warm_start->size()) start = (*warm_start)[i];
    EquilibriumSolution sol =
        solve_equilibrium(finger_problem(scenario, i, excursion, object_offset), start);
    const Mat3 r = spec.base.rotation();
    Vec3 push = Vec3::Zero();
    for (const ContactRecord& c : sol.state.contacts) push -= c.normal_force * (r * c.normal);
    out.net_force += push;
    if ((spec.base.position - center).dot(split) < 0.0) out.internal_force += push.dot(split);
    out.energy += sol.energy;
    out.phase = max_phase(out.phase, sol.state.phase);
    out.limit_engaged =
        out.limit_engaged || sol.state.theta_distal > spec.params.travel_limit_distal;
    out.fingers.push_back(std::move(sol));
  }
  out.internal_force = std::max(0.0, out.internal_force);
  return out;
}

ForceExcursionCurve simulate_power_grasp(const GraspScenario& scenario) {
  scenario.validate();
  if (scenario.grasp_type != GraspType::PowerCylinder) {
    throw ValidationError("grasp_type", "power grasp simulation needs PowerCylinder");
  }
  return build_curve(scenario);
}

ForceExcursionCurve simulate_pinch_grasp(const GraspScenario& scenario) {
  scenario.validate();
  if (scenario.grasp_type == GraspType::PowerCylinder) {
    throw ValidationError("grasp_type", "pinch simulation needs OpposedPinch or SphericalPinch");
  }
  return build_curve(scenario);
}

ForceExcursionCurve simulate(const GraspScenario& scenario) {
  return scenario.grasp_type == GraspType::PowerCylinder ? simulate_power_grasp(scenario)
                                                         : simulate_pinch_grasp(scenario);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("y", "must match x in length");
  LineFit fit;
  fit.count = x.size();
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

int stiffness_dimension(GraspType type) { return type == GraspType::SphericalPinch ? 3 : 2; }

GraspStiffness grasp_stiffness(const GraspScenario& scenario, double excursion) {
  scenario.validate();
  if (scenario.grasp_type == GraspType::PowerCylinder) {
    throw ValidationError("grasp_type", "grasp stiffness is defined for fingertip pinches");
  }
  if (scenario.object.contact_stiffness != 0.0) {
    throw ValidationError("object.contact_stiffness",
                          "grasp stiffness needs rigid fingertip contacts");
  }
  const GraspState state = solve_grasp(scenario, excursion);
  Mat3 total = Mat3::Zero();
  for (std::size_t i = 0; i < scenario.fingers.size(); ++i) {
    const Mat3 r = scenario.fingers[i].base.rotation();
    total += r * finger_contact_stiffness(scenario, i, state.fingers[i]) * r.transpose();
  }
  const int dim = stiffness_dimension(scenario.grasp_type);
  GraspStiffness out;
  out.grasp_type = scenario.grasp_type;
  const Mat3 sym = 0.5 * (total + total.transpose());
  out.matrix = sym.topLeftCorner(dim, dim);
  return out;
}

std::vector<Vec3> default_probe_directions(GraspType type) {
  std::vector<Vec3> out;
  for (int k = 0; k < 16; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 16.0;
    out.emplace_back(std::cos(a), std::sin(a), 0.0);
  }
  if (type == GraspType::SphericalPinch) {
    out.emplace_back(0.0, 0.0, 1.0);
    out.emplace_back(0.0, 0.0, -1.0);
  }
  return out;
}

double grasp_potential(const GraspScenario& scenario, double excursion, const Vec3& object_offset) {
  const GraspState base = solve_grasp(scenario, excursion);
  const std::vector<Vec4> warm = coordinates(base);
  const GraspState moved = solve_grasp(scenario, excursion, object_offset, &warm);
  return moved.energy + base.net_force.dot(object_offset);
}

EnergyWell energy_well(const GraspScenario& scenario, double excursion,
                       const std::vector<Vec3>& probe_directions, double displacement_cap) {
  if (!(displacement_cap > 0.0) || !std::isfinite(displacement_cap)) {
    throw ValidationError("displacement_cap", "must be a finite positive number");
  }
  const GraspStiffness k = grasp_stiffness(scenario, excursion);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.matrix, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig > 0.0)) {
    throw UnstableEquilibrium("grasp stiffness is not positive definite", min_eig);
  }

  const GraspState base = solve_grasp(scenario, excursion);
  const std::vector<Vec4> base_q = coordinates(base);
  auto potential = [&](const GraspState& s, const Vec3& offset) {
    return s.energy - base.energy + base.net_force.dot(offset);
  };

  EnergyWell well;
  well.object_center = scenario.object.center;
  well.hessian = k.matrix;
  well.holding_force = -base.net_force;
  constexpr int kSteps = 64;

  for (std::size_t d = 0; d < probe_directions.size(); ++d) {
    require_direction(probe_directions[d], "probe_directions[" + std::to_string(d) + "]");
    const Vec3 u = probe_directions[d].normalized();
    ProbeResult probe;
    probe.direction = u;
    std::vector<Vec4> warm = base_q;
    double t_prev = 0.0;
    bool broken = false;
    for (int step = 1; step <= kSteps && !broken; ++step) {
      const double t = displacement_cap * step / kSteps;
      const GraspState s = solve_grasp(scenario, excursion, t * u, &warm);
      if (all_fingertips_loaded(s)) {
        warm = coordinates(s);
        t_prev = t;
        continue;
      }
      double lo = t_prev;
      double hi = t;
      const std::vector<Vec4> anchor = warm;
      while (hi - lo > kBisectionTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (all_fingertips_loaded(solve_grasp(scenario, excursion, mid * u, &anchor))) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      probe.break_displacement = lo;
      probe.escape_work = potential(solve_grasp(scenario, excursion, lo * u, &anchor), lo * u);
      broken = true;
    }
    if (!broken) {
      probe.capped = true;
      probe.break_displacement = displacement_cap;
      probe.escape_work =
          potential(solve_grasp(scenario, excursion, displacement_cap * u, &warm),
                    displacement_cap * u);
    }
    well.probes.push_back(probe);
  }
  if (!well.probes.empty()) {
    well.min_escape_work =
        std::min_element(well.probes.begin(), well.probes.end(),
                         [](const ProbeResult& a, const ProbeResult& b) {
                           return a.escape_work < b.escape_work;
                         })->escape_work;
  }
  return well;
}

Deflection static_deflection(const Eigen::MatrixXd& stiffness, const Eigen::VectorXd& force) {
  if (stiffness.rows() != stiffness.cols() || stiffness.rows() != force.size()) {
    throw ValidationError("stiffness", "must be square and match the force dimension");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(stiffness);
  if (!lu.isInvertible()) throw SingularConfiguration("stiffness matrix is singular");
  Deflection out;
  out.displacement = lu.solve(force);
  out.magnitude = out.displacement.norm();
  out.rounded_mm = std::lround(out.magnitude);
  return out;
}

}  // namespace fingersim
