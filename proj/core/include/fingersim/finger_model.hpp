#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fingersim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Generalized coordinate layout shared by every module.
enum Coord : int { kThetaP = 0, kThetaD = 1, kTwistD = 2, kTwistP = 3 };
inline constexpr int kNumCoords = 4;

// Lengths in mm, stiffnesses in N*mm/rad, angles in rad.
struct FingerParams {
  double proximal_length = 70.0;
  double distal_length = 50.0;
  double k_proximal = 5.0;
  double k_distal_bend = 60.0;
  double k_distal_twist = 200.0;
  double k_proximal_twist = 10000.0;
  double r_proximal = 13.0;
  double r_distal = 6.0;
  std::array<double, 2> rest_angles{0.0, 0.0};
  double travel_limit_distal = 1.3;
  // Unset means 50 x k_distal_bend.
  std::optional<double> travel_limit_stiffness;

  double limit_stiffness() const {
    return travel_limit_stiffness.value_or(50.0 * k_distal_bend);
  }

  // Throws ValidationError naming the field (prefix is prepended).
  void validate(const std::string& prefix = "params") const;

  // Distal joints stiffer than the proximal one relative to their moment arms.
  bool power_grasp_capable() const;

  bool operator==(const FingerParams&) const = default;
};

enum class Link { Proximal, Distal, Fingertip };
enum class Phase { Sweep, Cage, Closed };

const char* to_string(Link link);
const char* to_string(Phase phase);

struct ContactRecord {
  Link link = Link::Fingertip;
  double location = 0.0;  // mm along the link from its joint
  Vec3 normal = Vec3::Zero();  // finger base frame, pointing away from the obstacle
  double normal_force = 0.0;
};

struct FingerState {
  double theta_proximal = 0.0;
  double theta_distal = 0.0;
  double twist_distal = 0.0;
  double twist_proximal = 0.0;
  double tendon_excursion = 0.0;
  double tendon_tension = 0.0;
  Phase phase = Phase::Sweep;
  std::vector<ContactRecord> contacts;

  Vec4 q() const { return {theta_proximal, theta_distal, twist_distal, twist_proximal}; }
  void set_q(const Vec4& q);
  static FingerState rest(const FingerParams& params);
};

struct LinkFrame {
  Vec3 origin;
  Mat3 rotation;  // columns: link x (along link), y, z
};

struct FingerKinematics {
  LinkFrame proximal;
  LinkFrame distal;
  Vec3 fingertip;
  Mat3 fingertip_rotation;

  // In-plane fingertip orientation angle (theta_p + theta_d for planar states).
  double fingertip_angle() const;
};

FingerKinematics forward_kinematics(const FingerParams& params, const Vec4& q);
FingerKinematics forward_kinematics(const FingerParams& params, const FingerState& state);

// Moment arms (mm per rad) over the full coordinate vector; twists carry no tendon.
Vec4 tendon_jacobian(const FingerParams& params);
// Joint torques T*r_i for a tension T.
Vec4 tendon_torques(const FingerParams& params, double tension);

Vec4 rest_coordinates(const FingerParams& params);

double elastic_energy(const FingerParams& params, const Vec4& q);
double elastic_energy(const FingerParams& params, const FingerState& state);
Vec4 energy_gradient(const FingerParams& params, const Vec4& q);
// Diagonal; the travel-limit spring switches on strictly past the limit.
Mat4 energy_hessian(const FingerParams& params, const Vec4& q);

// Serial-chain derivatives of a point rigidly attached to a link.
// The point is given in link coordinates (x along the link from its joint).
struct PointDerivatives {
  Vec3 position;
  Eigen::Matrix<double, 3, 4> jacobian;
  // hessian[k] is d^2 p_k / dq dq.
  std::array<Mat4, 3> hessian;
};

PointDerivatives point_derivatives(const FingerParams& params, const Vec4& q, Link link,
                                   const Vec3& local_point);

// 6x4 geometric Jacobian [v; w] of a point on the given link.
Eigen::Matrix<double, 6, 4> geometric_jacobian(const FingerParams& params, const Vec4& q,
                                               Link link, const Vec3& local_point);

}  // namespace fingersim
