#include "fingersim/obstacles.hpp"

#include "fingersim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fingersim {

namespace {

Mat3 projector(const RoundObstacle& r) {
  if (!r.axis) return Mat3::Identity();
  const Vec3 a = r.axis->normalized();
  return Mat3::Identity() - a * a.transpose();
}

PointDerivatives joint_point(const FingerParams& p, const Vec4& q) {
  return point_derivatives(p, q, Link::Proximal, Vec3(p.proximal_length, 0, 0));
}

PointDerivatives tip_point(const FingerParams& p, const Vec4& q) {
  return point_derivatives(p, q, Link::Distal, Vec3(p.distal_length, 0, 0));
}

PointDerivatives base_point() {
  PointDerivatives d;
  d.position.setZero();
  d.jacobian.setZero();
  for (auto& h : d.hessian) h.setZero();
  return d;
}

ContactGeometry half_space_point(const HalfSpace& h, const PointDerivatives& d, Link link,
                                 double location) {
  const Vec3 n = h.normal.normalized();
  ContactGeometry g;
  g.gap = n.dot(d.position - h.point);
  g.gradient = d.jacobian.transpose() * n;
  for (int k = 0; k < 3; ++k) g.hessian += n[k] * d.hessian[k];
  g.point = d.position;
  g.normal = n;
  g.link = link;
  g.location = location;
  return g;
}

// Distance from a segment a + t (b - a), t in [0, 1], to a round obstacle.
// The closest-point parameter is eliminated through the envelope formula.
ContactGeometry round_segment(const RoundObstacle& r, const PointDerivatives& a,
                              const PointDerivatives& b, Link link, double length) {
  const Mat3 m = projector(r);
  const Vec3 u = b.position - a.position;
  const Vec3 mu = m * u;
  const Vec3 ma = m * (a.position - r.center);
  double t = 1.0;
  const double uu = mu.squaredNorm();
  if (uu > 1e-14 * std::max(1.0, u.squaredNorm())) {
    t = std::clamp(-mu.dot(ma) / uu, 0.0, 1.0);
  }
  const Vec3 p = a.position + t * u;
  const Vec3 w = m * (p - r.center);
  const double dist = w.norm();
  if (dist < 1e-12) {
    throw InfeasibleGeometry("finger link passes through the obstacle axis");
  }
  const Vec3 n = w / dist;
  const Mat3 pn = m - n * n.transpose();

  const Eigen::Matrix<double, 3, 4> jp = (1.0 - t) * a.jacobian + t * b.jacobian;
  const Eigen::Matrix<double, 3, 4> ju = b.jacobian - a.jacobian;

  ContactGeometry g;
  g.gap = dist - r.radius;
  g.gradient = jp.transpose() * n;
  Mat4 fqq = jp.transpose() * (pn / dist) * jp;
  for (int k = 0; k < 3; ++k) fqq += n[k] * ((1.0 - t) * a.hessian[k] + t * b.hessian[k]);
  const double ftt = u.dot(pn * u) / dist;
  if (t > 0.0 && t < 1.0 && ftt > 0.0) {
    const Vec4 fqt = jp.transpose() * (pn / dist) * u + ju.transpose() * n;
    fqq -= fqt * fqt.transpose() / ftt;
  }
  g.hessian = fqq;
  g.point = p;
  g.normal = n;
  g.link = link;
  g.location = t * length;
  return g;
}

ContactGeometry round_point(const RoundObstacle& r, const PointDerivatives& d, Link link,
                            double location) {
  const Mat3 m = projector(r);
  const Vec3 w = m * (d.position - r.center);
  const double dist = w.norm();
  if (dist < 1e-12) {
    throw InfeasibleGeometry("contact point coincides with the obstacle center");
  }
  const Vec3 n = w / dist;
  const Mat3 pn = m - n * n.transpose();
  ContactGeometry g;
  g.gap = dist - r.radius;
  g.gradient = d.jacobian.transpose() * n;
  g.hessian = d.jacobian.transpose() * (pn / dist) * d.jacobian;
  for (int k = 0; k < 3; ++k) g.hessian += n[k] * d.hessian[k];
  g.point = d.position;
  g.normal = n;
  g.link = link;
  g.location = location;
  return g;
}

}  // namespace

int candidate_count(const Obstacle& obstacle) {
  if (std::holds_alternative<HalfSpace>(obstacle.shape) && obstacle.link == Link::Distal) return 2;
  return 1;
}

std::vector<ContactGeometry> contact_geometry(const FingerParams& params, const Vec4& q,
                                              const Obstacle& obstacle) {
  std::vector<ContactGeometry> out;
  if (const auto* h = std::get_if<HalfSpace>(&obstacle.shape)) {
    switch (obstacle.link) {
      case Link::Proximal:
        out.push_back(half_space_point(*h, joint_point(params, q), Link::Proximal,
                                       params.proximal_length));
        break;
      case Link::Distal:
        out.push_back(half_space_point(*h, joint_point(params, q), Link::Distal, 0.0));
        out.push_back(half_space_point(*h, tip_point(params, q), Link::Distal,
                                       params.distal_length));
        break;
      case Link::Fingertip:
        out.push_back(half_space_point(*h, tip_point(params, q), Link::Fingertip,
                                       params.distal_length));
        break;
    }
    return out;
  }
  const auto& r = std::get<RoundObstacle>(obstacle.shape);
  switch (obstacle.link) {
    case Link::Proximal:
      out.push_back(round_segment(r, base_point(), joint_point(params, q), Link::Proximal,
                                  params.proximal_length));
      break;
    case Link::Distal:
      out.push_back(round_segment(r, joint_point(params, q), tip_point(params, q), Link::Distal,
                                  params.distal_length));
      break;
    case Link::Fingertip:
      out.push_back(round_point(r, tip_point(params, q), Link::Fingertip, params.distal_length));
      break;
  }
  return out;
}

double base_clearance(const Obstacle& obstacle) {
  if (const auto* h = std::get_if<HalfSpace>(&obstacle.shape)) {
    return h->normal.normalized().dot(-h->point);
  }
  const auto& r = std::get<RoundObstacle>(obstacle.shape);
  return (projector(r) * (-r.center)).norm() - r.radius;
}

void validate_obstacle(const Obstacle& obstacle, const std::string& field) {
  if (!(obstacle.contact_stiffness >= 0.0) || !std::isfinite(obstacle.contact_stiffness)) {
    throw ValidationError(field + ".contact_stiffness", "must be finite and >= 0");
  }
  if (const auto* h = std::get_if<HalfSpace>(&obstacle.shape)) {
    if (!(h->normal.norm() > 0.0) || !h->point.allFinite() || !h->normal.allFinite()) {
      throw ValidationError(field + ".normal", "must be a finite nonzero vector");
    }
    return;
  }
  const auto& r = std::get<RoundObstacle>(obstacle.shape);
  if (!(r.radius > 0.0) || !std::isfinite(r.radius)) {
    throw ValidationError(field + ".radius", "must be a finite positive number");
  }
  if (!r.center.allFinite()) throw ValidationError(field + ".center", "must be finite");
  if (r.axis && !(r.axis->norm() > 0.0)) {
    throw ValidationError(field + ".axis", "must be a nonzero vector");
  }
}

}  // namespace fingersim
