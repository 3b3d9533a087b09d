#pragma once

#include "fingersim/compliance.hpp"
#include "fingersim/equilibrium.hpp"
#include "fingersim/grasp_sim.hpp"
#include "fingersim/stiffness_id.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fingersim::cli {

// Shortest round-trip-stable text for CSV cells.
std::string number(double v);

// Comment lines start with '#'; the header and rows follow.
std::string curve_csv(const ForceExcursionCurve& curve);
std::string trajectory_csv(const FingerParams& params,
                           const std::vector<EquilibriumSolution>& trajectory);
std::string compliance_field_csv(const std::vector<ComplianceEllipse>& field,
                                 const CenterOfCompliance& center);
std::string alignment_csv(const FingerParams& params,
                          const std::vector<EquilibriumSolution>& trajectory,
                          const std::vector<double>& angles_deg);

nlohmann::json matrix_json(const Eigen::MatrixXd& m);
nlohmann::json vector_json(const Eigen::VectorXd& v);
nlohmann::json conditioning_json(const Eigen::MatrixXd& stiffness, const ConditioningReport& report);
nlohmann::json fit_json(const StiffnessFit& fit, const ConditioningReport& report);
nlohmann::json well_json(const EnergyWell& well, double excursion,
                         const std::optional<GraspStiffness>& stiffness);

}  // namespace fingersim::cli
