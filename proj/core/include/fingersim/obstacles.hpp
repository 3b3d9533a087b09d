#pragma once

#include "fingersim/finger_model.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace fingersim {

// Free side is normal . (p - point) >= 0.
struct HalfSpace {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
};

// Cylinder when axis is set (distance measured perpendicular to it), sphere otherwise.
// In the finger plane a z-axis cylinder is a circle.
struct RoundObstacle {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  std::optional<Vec3> axis = Vec3::UnitZ();
};

struct Obstacle {
  std::variant<HalfSpace, RoundObstacle> shape;
  Link link = Link::Fingertip;
  // N/mm. Zero means a rigid non-penetration constraint.
  double contact_stiffness = 0.0;

  bool rigid() const { return contact_stiffness <= 0.0; }
};

// One candidate contact point produced by an obstacle/link pair.
// gap >= 0 is free; gradient and hessian are with respect to the generalized coordinates.
struct ContactGeometry {
  double gap = 0.0;
  Vec4 gradient = Vec4::Zero();
  Mat4 hessian = Mat4::Zero();
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  Link link = Link::Fingertip;
  double location = 0.0;
};

// Number of candidate points an obstacle generates; fixed for a given shape and link.
int candidate_count(const Obstacle& obstacle);

std::vector<ContactGeometry> contact_geometry(const FingerParams& params, const Vec4& q,
                                              const Obstacle& obstacle);

// Signed clearance of the finger base (origin) from the obstacle.
double base_clearance(const Obstacle& obstacle);

void validate_obstacle(const Obstacle& obstacle, const std::string& field);

}  // namespace fingersim
