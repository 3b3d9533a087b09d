#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fingersim {

enum class Direction { Forward, Backward };

const char* to_string(Direction d);

struct CycleSample {
  Eigen::VectorXd displacement;  // mm
  Eigen::VectorXd force;         // N
  int cycle = 0;
  Direction direction = Direction::Forward;
};

struct CycleDataset {
  int dimension = 2;
  std::vector<CycleSample> samples;

  // Dimension 2 or 3, consistent vectors, both directions in every cycle, |dx| <= max.
  void validate(double max_displacement = 3.0) const;
};

struct StiffnessFit {
  Eigen::MatrixXd matrix;           // N/mm, symmetric by construction
  Eigen::MatrixXd standard_errors;  // N/mm, per entry
  Eigen::VectorXd hysteresis_offset;  // N per axis
  Eigen::VectorXd hysteresis_standard_errors;
  double residual_rms = 0.0;  // N
  std::size_t sample_count = 0;
};

// Least squares over upper-triangle entries of K and per-axis offsets h:
// f = K dx + s h with s = +1 forward, -1 backward.
StiffnessFit fit_stiffness(const CycleDataset& data);

// Triangle-wave cycles along each axis and each pairwise diagonal.
// The offset hysteresis * (1, ..., 1) is added on forward legs and subtracted on backward legs.
CycleDataset synthesize_cycles(const Eigen::MatrixXd& k_true, double hysteresis,
                               double noise_sigma, int n_cycles, double amplitude,
                               std::uint64_t seed, int points_per_leg = 10);

struct ConditioningReport {
  Eigen::VectorXd eigenvalues;  // N/mm, descending
  Eigen::MatrixXd principal_axes;  // columns match eigenvalues
  double condition_number = 0.0;
  bool well_conditioned = false;
};

inline constexpr double kWellConditionedLimit = 3.0;

ConditioningReport conditioning_report(const Eigen::MatrixXd& stiffness);
ConditioningReport conditioning_report(const StiffnessFit& fit);

// CSV with header dx_mm,dy_mm[,dz_mm],fx_N,fy_N[,fz_N],cycle,direction.
void write_cycles_csv(std::ostream& out, const CycleDataset& data);
CycleDataset read_cycles_csv(std::istream& in);

}  // namespace fingersim
