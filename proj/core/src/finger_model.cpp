#include "fingersim/finger_model.hpp"

#include "fingersim/errors.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace fingersim {

namespace {

void require_positive(double value, const std::string& field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(field, "must be a finite positive number");
  }
}

Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }

struct ChainJoint {
  int coord;
  Vec3 axis;
  Vec3 origin;
};

// Joints in chain order: proximal flexion, proximal twist, distal flexion, distal twist.
struct Chain {
  std::array<ChainJoint, 4> joints;
  Mat3 proximal_rotation;
  Mat3 distal_rotation;
  Vec3 distal_origin;
};

Chain build_chain(const FingerParams& params, const Vec4& q) {
  Chain c;
  const Mat3 r1 = rot_z(q[kThetaP]);
  const Mat3 r2 = r1 * rot_y(q[kTwistP]);
  const Vec3 joint = r2 * Vec3(params.proximal_length, 0.0, 0.0);
  const Mat3 r3 = r2 * rot_z(q[kThetaD]);
  const Mat3 r4 = r3 * rot_y(q[kTwistD]);
  c.joints[0] = {kThetaP, Vec3::UnitZ(), Vec3::Zero()};
  c.joints[1] = {kTwistP, r1 * Vec3::UnitY(), Vec3::Zero()};
  c.joints[2] = {kThetaD, r2 * Vec3::UnitZ(), joint};
  c.joints[3] = {kTwistD, r3 * Vec3::UnitY(), joint};
  c.proximal_rotation = r2;
  c.distal_rotation = r4;
  c.distal_origin = joint;
  return c;
}

}  // namespace

const char* to_string(Link link) {
  switch (link) {
    case Link::Proximal: return "Proximal";
    case Link::Distal: return "Distal";
    case Link::Fingertip: return "Fingertip";
  }
  return "?";
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Sweep: return "Sweep";
    case Phase::Cage: return "Cage";
    case Phase::Closed: return "Closed";
  }
  return "?";
}

void FingerParams::validate(const std::string& prefix) const {
  require_positive(proximal_length, prefix + ".proximal_length");
  require_positive(distal_length, prefix + ".distal_length");
  require_positive(k_proximal, prefix + ".k_proximal");
  require_positive(k_distal_bend, prefix + ".k_distal_bend");
  require_positive(k_distal_twist, prefix + ".k_distal_twist");
  require_positive(k_proximal_twist, prefix + ".k_proximal_twist");
  require_positive(r_proximal, prefix + ".r_proximal");
  require_positive(r_distal, prefix + ".r_distal");
  require_positive(travel_limit_distal, prefix + ".travel_limit_distal");
  if (travel_limit_stiffness) {
    require_positive(*travel_limit_stiffness, prefix + ".travel_limit_stiffness");
  }
  for (std::size_t i = 0; i < rest_angles.size(); ++i) {
    if (!std::isfinite(rest_angles[i])) {
      throw ValidationError(prefix + ".rest_angles[" + std::to_string(i) + "]", "must be finite");
    }
  }
}

bool FingerParams::power_grasp_capable() const {
  return k_distal_bend / (r_distal * r_distal) > k_proximal / (r_proximal * r_proximal);
}

void FingerState::set_q(const Vec4& q) {
  theta_proximal = q[kThetaP];
  theta_distal = q[kThetaD];
  twist_distal = q[kTwistD];
  twist_proximal = q[kTwistP];
}

FingerState FingerState::rest(const FingerParams& params) {
  FingerState s;
  s.theta_proximal = params.rest_angles[0];
  s.theta_distal = params.rest_angles[1];
  return s;
}

double FingerKinematics::fingertip_angle() const {
  const Vec3 x = fingertip_rotation.col(0);
  return std::atan2(x.y(), x.x());
}

FingerKinematics forward_kinematics(const FingerParams& params, const Vec4& q) {
  const Chain c = build_chain(params, q);
  FingerKinematics k;
  k.proximal = {Vec3::Zero(), c.proximal_rotation};
  k.distal = {c.distal_origin, c.distal_rotation};
  k.fingertip = c.distal_origin + c.distal_rotation * Vec3(params.distal_length, 0.0, 0.0);
  k.fingertip_rotation = c.distal_rotation;
  return k;
}

FingerKinematics forward_kinematics(const FingerParams& params, const FingerState& state) {
  return forward_kinematics(params, state.q());
}

Vec4 tendon_jacobian(const FingerParams& params) {
  Vec4 r = Vec4::Zero();
  r[kThetaP] = params.r_proximal;
  r[kThetaD] = params.r_distal;
  return r;
}

Vec4 tendon_torques(const FingerParams& params, double tension) {
  return tension * tendon_jacobian(params);
}

Vec4 rest_coordinates(const FingerParams& params) {
  Vec4 q = Vec4::Zero();
  q[kThetaP] = params.rest_angles[0];
  q[kThetaD] = params.rest_angles[1];
  return q;
}

double elastic_energy(const FingerParams& params, const Vec4& q) {
  const Vec4 d = q - rest_coordinates(params);
  const double over = std::max(0.0, q[kThetaD] - params.travel_limit_distal);
  return 0.5 * params.k_proximal * d[kThetaP] * d[kThetaP] +
         0.5 * params.k_distal_bend * d[kThetaD] * d[kThetaD] +
         0.5 * params.k_distal_twist * d[kTwistD] * d[kTwistD] +
         0.5 * params.k_proximal_twist * d[kTwistP] * d[kTwistP] +
         0.5 * params.limit_stiffness() * over * over;
}

double elastic_energy(const FingerParams& params, const FingerState& state) {
  return elastic_energy(params, state.q());
}

Vec4 energy_gradient(const FingerParams& params, const Vec4& q) {
  const Vec4 d = q - rest_coordinates(params);
  Vec4 g;
  g[kThetaP] = params.k_proximal * d[kThetaP];
  g[kThetaD] = params.k_distal_bend * d[kThetaD] +
               params.limit_stiffness() * std::max(0.0, q[kThetaD] - params.travel_limit_distal);
  g[kTwistD] = params.k_distal_twist * d[kTwistD];
  g[kTwistP] = params.k_proximal_twist * d[kTwistP];
  return g;
}

Mat4 energy_hessian(const FingerParams& params, const Vec4& q) {
  Vec4 k;
  k[kThetaP] = params.k_proximal;
  k[kThetaD] = params.k_distal_bend +
               (q[kThetaD] > params.travel_limit_distal ? params.limit_stiffness() : 0.0);
  k[kTwistD] = params.k_distal_twist;
  k[kTwistP] = params.k_proximal_twist;
  return k.asDiagonal();
}

PointDerivatives point_derivatives(const FingerParams& params, const Vec4& q, Link link,
                                   const Vec3& local_point) {
  const Chain c = build_chain(params, q);
  PointDerivatives out;
  const bool on_proximal = link == Link::Proximal;
  out.position = on_proximal ? Vec3(c.proximal_rotation * local_point)
                             : Vec3(c.distal_origin + c.distal_rotation * local_point);
  const int n_active = on_proximal ? 2 : 4;

  out.jacobian.setZero();
  for (auto& h : out.hessian) h.setZero();
  for (int j = 0; j < n_active; ++j) {
    const ChainJoint& jj = c.joints[j];
    const Vec3 arm = out.position - jj.origin;
    out.jacobian.col(jj.coord) = jj.axis.cross(arm);
    for (int i = 0; i <= j; ++i) {
      const ChainJoint& ji = c.joints[i];
      const Vec3 second = ji.axis.cross(jj.axis.cross(arm));
      for (int k = 0; k < 3; ++k) {
        out.hessian[k](ji.coord, jj.coord) = second[k];
        out.hessian[k](jj.coord, ji.coord) = second[k];
      }
    }
  }
  return out;
}

Eigen::Matrix<double, 6, 4> geometric_jacobian(const FingerParams& params, const Vec4& q,
                                               Link link, const Vec3& local_point) {
  const Chain c = build_chain(params, q);
  const bool on_proximal = link == Link::Proximal;
  const Vec3 p = on_proximal ? Vec3(c.proximal_rotation * local_point)
                             : Vec3(c.distal_origin + c.distal_rotation * local_point);
  const int n_active = on_proximal ? 2 : 4;
  Eigen::Matrix<double, 6, 4> g = Eigen::Matrix<double, 6, 4>::Zero();
  for (int j = 0; j < n_active; ++j) {
    const ChainJoint& jj = c.joints[j];
    g.block<3, 1>(0, jj.coord) = jj.axis.cross(p - jj.origin);
    g.block<3, 1>(3, jj.coord) = jj.axis;
  }
  return g;
}

}  // namespace fingersim
