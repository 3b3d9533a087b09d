#pragma once

#include "fingersim/equilibrium.hpp"
#include "fingersim/finger_model.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace fingersim {

using Mat6 = Eigen::Matrix<double, 6, 6>;

// Twist ordering is (dx, dy, dz, rx, ry, rz); wrench ordering (fx, fy, fz, tx, ty, tz).
struct ComplianceMatrix {
  Mat6 matrix = Mat6::Zero();
  Vec3 reference_point = Vec3::Zero();
  std::string frame = "finger_base";

  Mat3 xx() const { return matrix.topLeftCorner<3, 3>(); }
  Mat3 x_theta() const { return matrix.topRightCorner<3, 3>(); }
  Mat3 theta_theta() const { return matrix.bottomRightCorner<3, 3>(); }

  static ComplianceMatrix from_blocks(const Mat3& xx, const Mat3& x_theta, const Mat3& theta_theta,
                                      const Vec3& reference_point = Vec3::Zero());

  // Symmetry to 1e-12 relative and eigenvalues >= -1e-10 * norm; throws ValidationError.
  void validate() const;
};

Mat3 skew(const Vec3& v);

struct AdjointMap {
  Vec3 offset = Vec3::Zero();

  Mat6 matrix() const;
  AdjointMap inverse() const { return {-offset}; }
};

// J C J^T with J = [[I, skew(d)], [0, I]]; the reference point moves by -d.
ComplianceMatrix transport(const ComplianceMatrix& c, const Vec3& d);

// C_xx + d x C_xt^T + C_xt d x^T + d x C_tt d x^T, the Cartesian block of transport(c, d).
Mat3 offset_cartesian_compliance(const ComplianceMatrix& c, const Vec3& d);

// Generalized coordinates left free by a set of linear constraint rows (orthonormal basis).
Eigen::MatrixXd constraint_null_space(const Eigen::MatrixXd& rows);

// Compliance of a point fixed to the distal link (link coordinates, mm) with the tendon held.
// Extra constraint rows (e.g. active contact normals in coordinate space) may be appended.
ComplianceMatrix joint_space_compliance(const FingerParams& params, const FingerState& state,
                                        const Vec3& point,
                                        const Eigen::MatrixXd& extra_constraints = {});

struct ComplianceEllipse {
  Vec3 point = Vec3::Zero();  // finger base frame
  double location = 0.0;      // mm along the distal link axis
  std::array<Vec2, 2> axes;   // in-plane unit vectors, major first
  std::array<double, 2> compliances{0.0, 0.0};  // mm/N, descending
};

ComplianceEllipse in_plane_ellipse(const ComplianceMatrix& c, double location = 0.0);

std::vector<ComplianceEllipse> compliance_field(const FingerParams& params, const FingerState& state,
                                                const std::vector<double>& locations);

struct CenterOfCompliance {
  double location = 0.0;          // mm past the distal joint along the link axis
  double max_compliance = 0.0;    // mm/N at that point
  bool interior = false;          // strictly inside the searched interval
  bool unimodal = false;          // one local minimum on the sampling grid
};

// Golden-section search on the major in-plane compliance along the distal link axis.
CenterOfCompliance center_of_compliance(const FingerParams& params, const FingerState& state,
                                        double lo, double hi, double tolerance = 0.01,
                                        int grid_samples = 241);

// Fingertip velocity per unit tendon excursion on the free closing path (in-plane, mm/mm).
Vec2 fingertip_motion_direction(const FingerParams& params, const FingerState& state);

// Angle (deg, 0..90) between fingertip motion and the major compliance axis at the fingertip.
std::vector<double> principal_direction_alignment(const FingerParams& params,
                                                  const std::vector<EquilibriumSolution>& trajectory);

// Excursion samples spanning free closing from rest to a proximal angle of 90 degrees.
std::vector<double> full_closing_range(const FingerParams& params, int samples = 50);

}  // namespace fingersim
