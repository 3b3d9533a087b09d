#include "fingersim/compliance.hpp"

#include "fingersim/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fingersim {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double major_compliance(const FingerParams& params, const FingerState& state, double s) {
  const ComplianceMatrix c = joint_space_compliance(params, state, Vec3(s, 0.0, 0.0));
  return in_plane_ellipse(c, s).compliances[0];
}

}  // namespace

ComplianceMatrix ComplianceMatrix::from_blocks(const Mat3& xx, const Mat3& x_theta,
                                               const Mat3& theta_theta,
                                               const Vec3& reference_point) {
  ComplianceMatrix c;
  c.matrix.topLeftCorner<3, 3>() = xx;
  c.matrix.topRightCorner<3, 3>() = x_theta;
  c.matrix.bottomLeftCorner<3, 3>() = x_theta.transpose();
  c.matrix.bottomRightCorner<3, 3>() = theta_theta;
  c.reference_point = reference_point;
  return c;
}

void ComplianceMatrix::validate() const {
  if (!matrix.allFinite()) throw ValidationError("compliance", "entries must be finite");
  const double norm = matrix.norm();
  if ((matrix - matrix.transpose()).norm() > 1e-12 * std::max(norm, 1e-300)) {
    throw ValidationError("compliance", "must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat6> es(matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * norm) {
    throw ValidationError("compliance", "must be positive semidefinite");
  }
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Mat6 AdjointMap::matrix() const {
  Mat6 j = Mat6::Identity();
  j.topRightCorner<3, 3>() = skew(offset);
  return j;
}

ComplianceMatrix transport(const ComplianceMatrix& c, const Vec3& d) {
  const Mat3 dx = skew(d);
  const Mat3 b = c.x_theta();
  const Mat3 t = c.theta_theta();
  // Block expansion of J C J^T; avoids the round-off of a dense 6x6 product.
  const Mat3 bt = b + dx * t;
  ComplianceMatrix out;
  out.matrix.topLeftCorner<3, 3>() = offset_cartesian_compliance(c, d);
  out.matrix.topRightCorner<3, 3>() = bt;
  out.matrix.bottomLeftCorner<3, 3>() = bt.transpose();
  out.matrix.bottomRightCorner<3, 3>() = t;
  out.reference_point = c.reference_point - d;
  out.frame = c.frame;
  return out;
}

Mat3 offset_cartesian_compliance(const ComplianceMatrix& c, const Vec3& d) {
  const Mat3 dx = skew(d);
  const Mat3 b = c.x_theta();
  return c.xx() + dx * b.transpose() + b * dx.transpose() + dx * c.theta_theta() * dx.transpose();
}

Eigen::MatrixXd constraint_null_space(const Eigen::MatrixXd& rows) {
  const int n = kNumCoords;
  if (rows.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

ComplianceMatrix joint_space_compliance(const FingerParams& params, const FingerState& state,
                                        const Vec3& point,
                                        const Eigen::MatrixXd& extra_constraints) {
  const Vec4 q = state.q();
  const Eigen::Matrix<double, 6, 4> g = geometric_jacobian(params, q, Link::Distal, point);
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 4>> gsvd(g);
  const auto& gs = gsvd.singularValues();
  if (gs[3] < 1e-9 * gs[0]) {
    throw SingularConfiguration("distal point Jacobian lost rank");
  }

  const int extra = static_cast<int>(extra_constraints.rows());
  if (extra > 0 && extra_constraints.cols() != kNumCoords) {
    throw ValidationError("extra_constraints", "rows must have one entry per coordinate");
  }
  Eigen::MatrixXd rows(1 + extra, kNumCoords);
  rows.row(0) = tendon_jacobian(params).transpose();
  if (extra > 0) rows.bottomRows(extra) = extra_constraints;
  const Eigen::MatrixXd z = constraint_null_space(rows);

  ComplianceMatrix c;
  c.reference_point = forward_kinematics(params, q).distal.origin +
                      forward_kinematics(params, q).distal.rotation * point;
  if (z.cols() == 0) return c;

  const Eigen::MatrixXd reduced = z.transpose() * energy_hessian(params, q) * z;
  Eigen::LLT<Eigen::MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success) {
    throw SingularConfiguration("reduced joint stiffness is not positive definite");
  }
  const Eigen::MatrixXd gz = g * z;
  const Mat6 full = gz * llt.solve(gz.transpose());
  c.matrix = 0.5 * (full + full.transpose());
  return c;
}

ComplianceEllipse in_plane_ellipse(const ComplianceMatrix& c, double location) {
  const Eigen::Matrix2d block = c.matrix.topLeftCorner<2, 2>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (block + block.transpose()));
  ComplianceEllipse e;
  e.point = c.reference_point;
  e.location = location;
  e.compliances = {std::max(0.0, es.eigenvalues()[1]), std::max(0.0, es.eigenvalues()[0])};
  e.axes = {es.eigenvectors().col(1), es.eigenvectors().col(0)};
  return e;
}

std::vector<ComplianceEllipse> compliance_field(const FingerParams& params, const FingerState& state,
                                                const std::vector<double>& locations) {
  std::vector<ComplianceEllipse> out;
  out.reserve(locations.size());
  for (double s : locations) {
    out.push_back(in_plane_ellipse(joint_space_compliance(params, state, Vec3(s, 0.0, 0.0)), s));
  }
  return out;
}

CenterOfCompliance center_of_compliance(const FingerParams& params, const FingerState& state,
                                        double lo, double hi, double tolerance,
                                        int grid_samples) {
  if (!(hi > lo)) throw ValidationError("search_interval", "hi must exceed lo");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance", "must be > 0");
  grid_samples = std::max(grid_samples, 3);

  std::vector<double> s(grid_samples);
  std::vector<double> f(grid_samples);
  double fmax = 0.0;
  for (int i = 0; i < grid_samples; ++i) {
    s[i] = lo + (hi - lo) * i / (grid_samples - 1);
    f[i] = major_compliance(params, state, s[i]);
    fmax = std::max(fmax, f[i]);
  }
  const auto best = std::min_element(f.begin(), f.end()) - f.begin();
  const double flat = 1e-12 * std::max(fmax, 1e-300);
  int minima = 0;
  for (int i = 0; i < grid_samples; ++i) {
    const bool left = i == 0 || f[i - 1] > f[i] + flat;
    const bool right = i == grid_samples - 1 || f[i + 1] > f[i] + flat;
    if (left && right) ++minima;
  }

  double a = s[std::max<std::ptrdiff_t>(best - 1, 0)];
  double b = s[std::min<std::ptrdiff_t>(best + 1, grid_samples - 1)];
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = major_compliance(params, state, x1);
  double f2 = major_compliance(params, state, x2);
  while (b - a > tolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = major_compliance(params, state, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = major_compliance(params, state, x2);
    }
  }

  CenterOfCompliance out;
  out.location = 0.5 * (a + b);
  out.max_compliance = major_compliance(params, state, out.location);
  out.interior = out.location > lo + tolerance && out.location < hi - tolerance;
  out.unimodal = minima == 1;
  return out;
}

Vec2 fingertip_motion_direction(const FingerParams& params, const FingerState& state) {
  const Vec4 q = state.q();
  const Vec4 r = tendon_jacobian(params);
  const Vec4 kinv_r = energy_hessian(params, q).diagonal().cwiseInverse().cwiseProduct(r);
  const Vec4 dq = kinv_r / r.dot(kinv_r);
  const PointDerivatives tip =
      point_derivatives(params, q, Link::Distal, Vec3(params.distal_length, 0.0, 0.0));
  const Vec3 v = tip.jacobian * dq;
  return v.head<2>();
}

std::vector<double> principal_direction_alignment(
    const FingerParams& params, const std::vector<EquilibriumSolution>& trajectory) {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const FingerState& state = trajectory[i].state;
    if (!state.contacts.empty()) {
      throw ValidationError("trajectory[" + std::to_string(i) + "]",
                            "alignment is defined on the free closing path");
    }
    const ComplianceMatrix c =
        joint_space_compliance(params, state, Vec3(params.distal_length, 0.0, 0.0));
    const Vec2 axis = in_plane_ellipse(c).axes[0];
    const Vec2 motion = fingertip_motion_direction(params, state);
    const double cosine = std::abs(axis.dot(motion)) / (axis.norm() * motion.norm());
    out.push_back(std::acos(std::clamp(cosine, 0.0, 1.0)) * kRadToDeg);
  }
  return out;
}

std::vector<double> full_closing_range(const FingerParams& params, int samples) {
  if (samples < 2) throw ValidationError("samples", "must be >= 2");
  const double e_max = free_excursion_for_proximal_angle(params, std::numbers::pi / 2.0);
  std::vector<double> out(samples);
  for (int i = 0; i < samples; ++i) out[i] = e_max * i / (samples - 1);
  return out;
}

}  // namespace fingersim
