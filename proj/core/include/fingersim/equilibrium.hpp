#pragma once

#include "fingersim/finger_model.hpp"
#include "fingersim/obstacles.hpp"

#include <optional>
#include <vector>

namespace fingersim {

struct EquilibriumProblem {
  FingerParams params;
  double tendon_excursion = 0.0;  // mm
  std::vector<Obstacle> obstacles;
  double solver_tolerance = 1e-8;
  int max_iterations = 500;

  void validate() const;
};

enum class ConstraintKind { Tendon, Contact, TravelLimit };

struct ActiveConstraint {
  ConstraintKind kind = ConstraintKind::Tendon;
  std::size_t obstacle = 0;  // index into problem.obstacles for contacts
  double multiplier = 0.0;   // N for tendon and contacts, N*mm/rad overshoot torque for the limit
};

struct EquilibriumSolution {
  FingerState state;
  double energy = 0.0;  // N*mm, elastic joints plus compliant contact pads
  std::vector<ActiveConstraint> active_constraints;
  bool converged = false;
  int iterations = 0;
  double kkt_residual = 0.0;  // relative stationarity residual
};

// Energy minimizer under the tendon and obstacles; starts from `start` or from rest.
EquilibriumSolution solve_equilibrium(const EquilibriumProblem& problem,
                                      const std::optional<Vec4>& start = std::nullopt);

EquilibriumSolution solve_free_closing(const EquilibriumProblem& problem);

EquilibriumSolution solve_contact_equilibrium(const EquilibriumProblem& problem,
                                              const std::optional<Vec4>& start = std::nullopt);

// One solution per sample, each warm-started from the previous one.
std::vector<EquilibriumSolution> closing_trajectory(const EquilibriumProblem& problem,
                                                    const std::vector<double>& excursion_samples);

Phase classify_phase(const std::vector<ContactRecord>& contacts);

// Total potential (elastic plus compliant pads) of a configuration; no constraint terms.
double total_energy(const EquilibriumProblem& problem, const Vec4& q);

// Excursion at which the free finger reaches a proximal flexion angle (below the travel limit).
double free_excursion_for_proximal_angle(const FingerParams& params, double theta_p);

}  // namespace fingersim
