#pragma once

#include "fingersim/compliance.hpp"
#include "fingersim/finger_model.hpp"
#include "fingersim/grasp_sim.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <random>

namespace fingersim::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Vec3 random_vec3(Rng& rng, double scale) {
  return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale));
}

// Finger that can close well past 90 degrees before the distal stop.
inline FingerParams random_params(Rng& rng) {
  FingerParams p;
  p.proximal_length = uniform(rng, 40.0, 90.0);
  p.distal_length = uniform(rng, 25.0, 60.0);
  p.k_proximal = uniform(rng, 2.0, 50.0);
  p.k_distal_bend = uniform(rng, 20.0, 300.0);
  p.k_distal_twist = uniform(rng, 50.0, 500.0);
  p.k_proximal_twist = uniform(rng, 1000.0, 20000.0);
  p.r_proximal = uniform(rng, 7.0, 16.0);
  p.r_distal = uniform(rng, 3.0, 6.5);
  p.rest_angles = {uniform(rng, -0.1, 0.1), uniform(rng, 0.0, 0.4)};
  p.travel_limit_distal = uniform(rng, 1.0, 1.5);
  return p;
}

inline Vec4 random_q(Rng& rng) {
  return Vec4(uniform(rng, -0.3, 1.8), uniform(rng, -0.3, 1.6), uniform(rng, -0.4, 0.4),
              uniform(rng, -0.3, 0.3));
}

// Random symmetric PSD 6x6, occasionally rank deficient.
inline Mat6 random_psd(Rng& rng) {
  const int rank = uniform_int(rng, 1, 6);
  Eigen::MatrixXd a(6, rank);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < rank; ++j) a(i, j) = uniform(rng, -1.0, 1.0);
  }
  a.topRows(3) *= uniform(rng, 0.1, 10.0);
  return a * a.transpose();
}

inline Eigen::MatrixXd random_spd(Rng& rng, int n, double lo, double hi) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = uniform(rng, -1.0, 1.0);
  }
  Eigen::MatrixXd k = a * a.transpose() / n;
  k.diagonal().array() += lo;
  return k * (hi / std::max(hi, k.norm()));
}

// Structurally valid scenario of a random grasp type; the geometry need not grasp anything.
inline GraspScenario random_scenario(Rng& rng) {
  GraspScenario s;
  const int type = uniform_int(rng, 0, 2);
  const double half = uniform(rng, 30.0, 90.0);
  const double height = uniform(rng, 10.0, 60.0);
  auto params = [&] {
    FingerParams p = random_params(rng);
    if (uniform_int(rng, 0, 1) == 1) p.travel_limit_stiffness = uniform(rng, 100.0, 10000.0);
    return p;
  };
  if (type == 2) {
    s.grasp_type = GraspType::SphericalPinch;
    s.object.kind = ObjectKind::Sphere;
    s.object.center = Vec3(0.0, 0.0, height);
    for (int k = 0; k < 3; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 3.0;
      const Vec3 pos(half * std::cos(a), half * std::sin(a), 0.0);
      s.fingers.push_back({{pos, Vec3::UnitZ(), -pos.normalized()}, params()});
    }
  } else {
    s.grasp_type = type == 0 ? GraspType::OpposedPinch : GraspType::PowerCylinder;
    s.object.center = Vec3(0.0, height, 0.0);
    s.fingers.push_back({{Vec3(-half, 0.0, 0.0), Vec3::UnitY(), Vec3::UnitX()}, params()});
    s.fingers.push_back({{Vec3(half, 0.0, 0.0), Vec3::UnitY(), -Vec3::UnitX()}, params()});
    if (type == 1) s.object.contact_stiffness = uniform(rng, 0.0, 50.0);
  }
  s.object.width = uniform(rng, 5.0, 120.0);
  const int n = uniform_int(rng, 1, 30);
  double e = uniform(rng, -1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    s.excursion_schedule.push_back(e);
    e += uniform(rng, 0.01, 1.0);
  }
  s.solver.tolerance = uniform(rng, 1e-10, 1e-6);
  s.solver.max_iterations = uniform_int(rng, 50, 1000);
  return s;
}

}  // namespace fingersim::testing
