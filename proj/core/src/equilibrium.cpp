#include "fingersim/equilibrium.hpp"

#include "fingersim/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fingersim {

namespace {

constexpr int kTendon = -1;

struct Constraint {
  double value = 0.0;
  Vec4 gradient = Vec4::Zero();
  Mat4 hessian = Mat4::Zero();
  int obstacle = kTendon;
  ContactGeometry geometry;
  double priority = 0.0;  // larger is more distal, used to break ties
};

struct Evaluation {
  double energy = 0.0;
  Vec4 gradient = Vec4::Zero();
  Mat4 hessian = Mat4::Zero();
  std::vector<Constraint> constraints;
  std::vector<std::pair<int, ContactGeometry>> pads;  // compliant contacts in touch
};

double link_priority(Link link, double location) {
  return static_cast<double>(static_cast<int>(link)) * 1e6 + location;
}

Evaluation evaluate(const EquilibriumProblem& p, const Vec4& q) {
  Evaluation ev;
  ev.energy = elastic_energy(p.params, q);
  ev.gradient = energy_gradient(p.params, q);
  ev.hessian = energy_hessian(p.params, q);

  Constraint tendon;
  const Vec4 r = tendon_jacobian(p.params);
  tendon.value = r.dot(q - rest_coordinates(p.params)) - p.tendon_excursion;
  tendon.gradient = r;
  tendon.priority = -1.0;
  ev.constraints.push_back(tendon);

  for (std::size_t i = 0; i < p.obstacles.size(); ++i) {
    const Obstacle& ob = p.obstacles[i];
    for (const ContactGeometry& g : contact_geometry(p.params, q, ob)) {
      if (ob.rigid()) {
        Constraint c;
        c.value = g.gap;
        c.gradient = g.gradient;
        c.hessian = g.hessian;
        c.obstacle = static_cast<int>(i);
        c.geometry = g;
        c.priority = link_priority(g.link, g.location);
        ev.constraints.push_back(c);
      } else if (g.gap < 0.0) {
        const double k = ob.contact_stiffness;
        ev.energy += 0.5 * k * g.gap * g.gap;
        ev.gradient += k * g.gap * g.gradient;
        ev.hessian += k * (g.gradient * g.gradient.transpose() + g.gap * g.hessian);
        ev.pads.emplace_back(static_cast<int>(i), g);
      }
    }
  }
  return ev;
}

double violation(const Evaluation& ev) {
  double v = 0.0;
  for (const Constraint& c : ev.constraints) v += std::max(0.0, -c.value);
  return v;
}

Mat4 positive_definite(const Mat4& h, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (h + h.transpose()));
  Vec4 ev = es.eigenvalues();
  bool clamped = false;
  for (int i = 0; i < 4; ++i) {
    if (ev[i] < floor) {
      ev[i] = floor;
      clamped = true;
    }
  }
  if (!clamped) return 0.5 * (h + h.transpose());
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Curvature along loaded constraint normals does not affect the constrained step,
// so it is lifted first; any remaining negative curvature is clamped.
Mat4 convexify(const Mat4& h, const std::vector<Constraint>& cons, const Eigen::VectorXd& mu,
               double floor) {
  Mat4 sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Mat4> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  Mat4 normals = Mat4::Zero();
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (mu[static_cast<int>(i)] > 0.0) {
      const Vec4 a = cons[i].gradient;
      normals += a * a.transpose() / std::max(a.squaredNorm(), 1e-300);
    }
  }
  Mat4 lifted = sym;
  if (normals.trace() > 0.0) {
    double sigma = sym.cwiseAbs().maxCoeff();
    for (int k = 0; k < 8; ++k, sigma *= 4.0) {
      lifted = sym + sigma * normals;
      es.compute(lifted, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() >= floor) return lifted;
    }
    lifted = sym + sym.cwiseAbs().maxCoeff() * normals;
  }
  return positive_definite(lifted, floor);
}

struct QpResult {
  bool ok = false;
  Vec4 step = Vec4::Zero();
  Eigen::VectorXd multipliers;
  std::vector<int> active;
  double objective = std::numeric_limits<double>::infinity();
  double priority = -std::numeric_limits<double>::infinity();
};

// min 1/2 d'Hd + g'd  s.t.  c_i + a_i'd >= 0, by enumerating active sets.
QpResult solve_qp(const Mat4& h, const Vec4& g, const std::vector<Constraint>& cons) {
  const int m = static_cast<int>(cons.size());
  Eigen::LLT<Mat4> llt(h);
  const Vec4 hg = llt.solve(g);
  QpResult best;
  best.multipliers = Eigen::VectorXd::Zero(m);
  double mu_scale = 1.0 + g.norm();

  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> set;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) set.push_back(i);
    }
    const int s = static_cast<int>(set.size());
    Vec4 d;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(s);
    if (s == 0) {
      d = -hg;
    } else {
      Eigen::MatrixXd a(s, 4);
      Eigen::VectorXd c(s);
      for (int k = 0; k < s; ++k) {
        a.row(k) = cons[set[k]].gradient.transpose();
        c[k] = cons[set[k]].value;
      }
      const Eigen::MatrixXd hat = llt.solve(a.transpose());
      const Eigen::MatrixXd schur = a * hat;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(schur);
      lu.setThreshold(1e-13);
      if (!lu.isInvertible()) continue;
      mu = lu.solve(-c + a * hg);
      d = hat * mu - hg;
    }
    bool valid = true;
    for (int k = 0; k < s && valid; ++k) {
      if (mu[k] < -1e-10 * mu_scale) valid = false;
    }
    double prio = 0.0;
    for (int k = 0; k < s; ++k) prio += cons[set[k]].priority;
    for (int i = 0; i < m && valid; ++i) {
      if (mask & (1u << i)) continue;
      const double lin = cons[i].value + cons[i].gradient.dot(d);
      if (lin < -1e-10 * (1.0 + std::abs(cons[i].value))) valid = false;
    }
    if (!valid) continue;
    const double obj = 0.5 * d.dot(h * d) + g.dot(d);
    const double tie = 1e-12 * (1.0 + std::abs(obj));
    const bool better = obj < best.objective - tie ||
                        (std::abs(obj - best.objective) <= tie && prio > best.priority);
    if (better) {
      best.ok = true;
      best.step = d;
      best.objective = obj;
      best.priority = prio;
      best.active = set;
      best.multipliers.setZero();
      for (int k = 0; k < s; ++k) best.multipliers[set[k]] = std::max(0.0, mu[k]);
    }
  }
  return best;
}

// Least-squares multipliers on the QP active set; they do not inherit the
// conditioning of the modified Hessian.
Eigen::VectorXd first_order_multipliers(const Evaluation& ev, const QpResult& qp) {
  Eigen::VectorXd out = qp.multipliers;
  const int s = static_cast<int>(qp.active.size());
  if (s == 0) return out;
  Eigen::MatrixXd at(4, s);
  for (int k = 0; k < s; ++k) at.col(k) = ev.constraints[qp.active[k]].gradient;
  const Eigen::VectorXd mu = at.colPivHouseholderQr().solve(ev.gradient);
  if (mu.minCoeff() < 0.0) return out;
  for (int k = 0; k < s; ++k) out[qp.active[k]] = mu[k];
  return out;
}

void validate_samples(const std::vector<double>& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw ValidationError("excursion_samples[" + std::to_string(i) + "]", "must be finite");
    }
    if (i > 0 && samples[i] < samples[i - 1]) {
      throw ValidationError("excursion_samples", "must be sorted ascending");
    }
  }
}

EquilibriumSolution package(const EquilibriumProblem& p, const Vec4& q, const Evaluation& ev,
                            const Eigen::VectorXd& mu, int iterations, double residual) {
  EquilibriumSolution sol;
  sol.state.set_q(q);
  sol.state.tendon_excursion = p.tendon_excursion;
  sol.energy = ev.energy;
  sol.converged = true;
  sol.iterations = iterations;
  sol.kkt_residual = residual;

  const double force_floor = 1e-12 * (1.0 + ev.gradient.norm());
  for (std::size_t i = 0; i < ev.constraints.size(); ++i) {
    const Constraint& c = ev.constraints[i];
    if (mu[static_cast<int>(i)] <= force_floor) continue;
    if (c.obstacle == kTendon) {
      sol.state.tendon_tension = mu[static_cast<int>(i)];
      sol.active_constraints.push_back({ConstraintKind::Tendon, 0, sol.state.tendon_tension});
      continue;
    }
    ContactRecord rec;
    rec.link = c.geometry.link;
    rec.location = c.geometry.location;
    rec.normal = c.geometry.normal;
    rec.normal_force = mu[static_cast<int>(i)];
    sol.state.contacts.push_back(rec);
    sol.active_constraints.push_back(
        {ConstraintKind::Contact, static_cast<std::size_t>(c.obstacle), rec.normal_force});
  }
  for (const auto& [index, g] : ev.pads) {
    ContactRecord rec;
    rec.link = g.link;
    rec.location = g.location;
    rec.normal = g.normal;
    rec.normal_force = -p.obstacles[index].contact_stiffness * g.gap;
    sol.state.contacts.push_back(rec);
    sol.active_constraints.push_back(
        {ConstraintKind::Contact, static_cast<std::size_t>(index), rec.normal_force});
  }
  const double over = q[kThetaD] - p.params.travel_limit_distal;
  if (over > 0.0) {
    sol.active_constraints.push_back(
        {ConstraintKind::TravelLimit, 0, p.params.limit_stiffness() * over});
  }
  sol.state.phase = classify_phase(sol.state.contacts);
  return sol;
}

}  // namespace

void EquilibriumProblem::validate() const {
  params.validate("params");
  if (!std::isfinite(tendon_excursion)) {
    throw ValidationError("tendon_excursion", "must be finite");
  }
  if (!(solver_tolerance > 0.0)) throw ValidationError("solver.tolerance", "must be > 0");
  if (max_iterations <= 0) throw ValidationError("solver.max_iterations", "must be > 0");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    validate_obstacle(obstacles[i], "obstacles[" + std::to_string(i) + "]");
  }
}

Phase classify_phase(const std::vector<ContactRecord>& contacts) {
  bool proximal = false;
  bool distal = false;
  for (const ContactRecord& c : contacts) {
    if (c.normal_force <= 0.0) continue;
    if (c.link == Link::Proximal) {
      proximal = true;
    } else {
      distal = true;
    }
  }
  if (distal) return Phase::Closed;
  if (proximal) return Phase::Cage;
  return Phase::Sweep;
}

double total_energy(const EquilibriumProblem& problem, const Vec4& q) {
  return evaluate(problem, q).energy;
}

double free_excursion_for_proximal_angle(const FingerParams& params, double theta_p) {
  const double s = params.r_proximal * params.r_proximal / params.k_proximal +
                   params.r_distal * params.r_distal / params.k_distal_bend;
  return (theta_p - params.rest_angles[0]) * s * params.k_proximal / params.r_proximal;
}

namespace {

EquilibriumSolution solve_from(const EquilibriumProblem& problem, Vec4 q) {
  const double tol = problem.solver_tolerance;
  const double floor = 1e-6 * energy_hessian(problem.params, q).diagonal().minCoeff();
  Eigen::VectorXd mu;
  double rho = 1.0;
  double last_residual = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= problem.max_iterations; ++it) {
    const Evaluation ev = evaluate(problem, q);
    const int m = static_cast<int>(ev.constraints.size());
    if (mu.size() != m) mu = Eigen::VectorXd::Zero(m);

    Mat4 h = ev.hessian;
    for (int i = 0; i < m; ++i) h -= mu[i] * ev.constraints[i].hessian;
    h = convexify(h, ev.constraints, mu, floor);

    const QpResult qp = solve_qp(h, ev.gradient, ev.constraints);
    if (!qp.ok) {
      throw InfeasibleGeometry("no configuration satisfies the tendon and contact constraints");
    }

    const Eigen::VectorXd estimate = first_order_multipliers(ev, qp);
    Vec4 stationarity = ev.gradient;
    double complementarity = 0.0;
    for (int i = 0; i < m; ++i) {
      stationarity -= estimate[i] * ev.constraints[i].gradient;
      complementarity = std::max(complementarity, std::abs(estimate[i] * ev.constraints[i].value));
    }
    const double scale = std::max(1.0, ev.gradient.norm());
    double max_violation = 0.0;
    for (const Constraint& c : ev.constraints) max_violation = std::max(max_violation, -c.value);
    last_residual = stationarity.norm() / scale;
    if (last_residual <= tol && max_violation <= tol && complementarity / scale <= tol) {
      return package(problem, q, ev, estimate, it, last_residual);
    }

    rho = std::max(rho, 1.5 * (qp.multipliers.size() ? qp.multipliers.maxCoeff() : 0.0) + 1e-6);
    auto merit = [&](const Evaluation& e) { return e.energy + rho * violation(e); };
    const double merit0 = merit(ev);
    const double slope = ev.gradient.dot(qp.step) - rho * violation(ev);

    Vec4 next = q + qp.step;
    Evaluation trial = evaluate(problem, next);
    bool accepted = merit(trial) <= merit0 + 1e-4 * slope + 1e-14 * std::abs(merit0);
    if (!accepted && !qp.active.empty()) {
      // Second-order correction back onto the curved active constraints.
      const int s = static_cast<int>(qp.active.size());
      Eigen::MatrixXd a(s, 4);
      Eigen::VectorXd c(s);
      for (int k = 0; k < s; ++k) {
        const int idx = qp.active[k];
        a.row(k) = ev.constraints[idx].gradient.transpose();
        c[k] = trial.constraints[idx].value;
      }
      Eigen::LLT<Mat4> llt(h);
      const Eigen::MatrixXd hat = llt.solve(a.transpose());
      const Eigen::VectorXd y = (a * hat).fullPivLu().solve(c);
      const Vec4 corrected = next - hat * y;
      Evaluation soc = evaluate(problem, corrected);
      if (merit(soc) <= merit0 + 1e-4 * slope + 1e-14 * std::abs(merit0)) {
        next = corrected;
        accepted = true;
      }
    }
    if (!accepted) {
      double alpha = 0.5;
      while (alpha > 1e-12) {
        next = q + alpha * qp.step;
        trial = evaluate(problem, next);
        if (merit(trial) <= merit0 + 1e-4 * alpha * slope + 1e-14 * std::abs(merit0)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (!accepted && qp.step.lpNorm<Eigen::Infinity>() < 1e-13) {
      // Stalled at round-off level; accept the point if the residual is close.
      if (last_residual <= 10.0 * tol && max_violation <= 10.0 * tol) {
        return package(problem, q, ev, qp.multipliers, it, last_residual);
      }
    }
    q = next;
    mu = qp.multipliers;
  }
  throw NonConvergence("equilibrium solver hit the iteration cap with residual " +
                       std::to_string(last_residual));
}

// Largest excursion increment per continuation step: about 0.05 rad on the joint with the
// smaller moment arm.
double continuation_step(const FingerParams& params) {
  return 0.05 * std::min(params.r_proximal, params.r_distal);
}

}  // namespace

EquilibriumSolution solve_equilibrium(const EquilibriumProblem& problem,
                                      const std::optional<Vec4>& start) {
  problem.validate();
  for (std::size_t i = 0; i < problem.obstacles.size(); ++i) {
    if (base_clearance(problem.obstacles[i]) < 0.0) {
      throw InfeasibleGeometry("obstacle " + std::to_string(i) + " overlaps the finger base");
    }
  }
  const Vec4 q0 = start ? *start : rest_coordinates(problem.params);
  if (problem.obstacles.empty()) return solve_from(problem, q0);

  // Obstacles make the energy landscape non-convex. Pulling the tendon in small increments
  // keeps every iterate on the branch the finger reaches without passing through an object.
  const double e0 =
      std::max(0.0, tendon_jacobian(problem.params).dot(q0 - rest_coordinates(problem.params)));
  const double span = problem.tendon_excursion - e0;
  const int steps = span > 0.0 ? static_cast<int>(std::ceil(span / continuation_step(problem.params))) : 1;
  EquilibriumProblem stage = problem;
  Vec4 q = q0;
  int iterations = 0;
  for (int k = 1; k < steps; ++k) {
    stage.tendon_excursion = e0 + span * k / steps;
    const EquilibriumSolution s = solve_from(stage, q);
    q = s.state.q();
    iterations += s.iterations;
  }
  EquilibriumSolution out = solve_from(problem, q);
  out.iterations += iterations;
  return out;
}

EquilibriumSolution solve_free_closing(const EquilibriumProblem& problem) {
  if (!problem.obstacles.empty()) {
    throw ValidationError("obstacles", "free closing takes no obstacles");
  }
  return solve_equilibrium(problem);
}

EquilibriumSolution solve_contact_equilibrium(const EquilibriumProblem& problem,
                                              const std::optional<Vec4>& start) {
  return solve_equilibrium(problem, start);
}

std::vector<EquilibriumSolution> closing_trajectory(const EquilibriumProblem& problem,
                                                    const std::vector<double>& excursion_samples) {
  validate_samples(excursion_samples);
  std::vector<EquilibriumSolution> out;
  out.reserve(excursion_samples.size());
  EquilibriumProblem p = problem;
  std::optional<Vec4> warm;
  for (std::size_t i = 0; i < excursion_samples.size(); ++i) {
    p.tendon_excursion = excursion_samples[i];
    try {
      out.push_back(solve_equilibrium(p, warm));
    } catch (const NonConvergence& e) {
      throw NonConvergence(e.what(), i);
    } catch (const InfeasibleGeometry& e) {
      throw InfeasibleGeometry(std::string(e.what()) + " (sample " + std::to_string(i) + ")");
    }
    warm = out.back().state.q();
  }
  return out;
}

}  // namespace fingersim
