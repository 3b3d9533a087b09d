#include "fingersim_cli/outputs.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace fingersim::cli {

using nlohmann::json;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

void row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

}  // namespace

std::string number(double v) {
  if (v == 0.0) return "0";
  return fmt::format("{}", v);
}

std::string curve_csv(const ForceExcursionCurve& curve) {
  std::string out = fmt::format("# grasp_type={}\n", to_string(curve.grasp_type));
  if (curve.knee_excursion) out += "# knee_excursion_mm=" + number(*curve.knee_excursion) + "\n";
  if (curve.limit_excursion) out += "# limit_excursion_mm=" + number(*curve.limit_excursion) + "\n";
  row(out, {"excursion_mm", "force_N", "phase", "limit_engaged"});
  for (const CurveSample& s : curve.samples) {
    row(out, {number(s.excursion), number(s.force), to_string(s.phase), s.limit_engaged ? "1" : "0"});
  }
  return out;
}

std::string trajectory_csv(const FingerParams& params,
                           const std::vector<EquilibriumSolution>& trajectory) {
  std::string out;
  row(out, {"excursion_mm", "theta_p_deg", "theta_d_deg", "twist_d_deg", "tension_N", "tip_x_mm",
            "tip_y_mm", "energy_Nmm", "phase", "contacts"});
  for (const EquilibriumSolution& s : trajectory) {
    const FingerState& st = s.state;
    const Vec3 tip = forward_kinematics(params, st).fingertip;
    row(out, {number(st.tendon_excursion), number(st.theta_proximal * kDeg),
              number(st.theta_distal * kDeg), number(st.twist_distal * kDeg),
              number(st.tendon_tension), number(tip.x()), number(tip.y()), number(s.energy),
              to_string(st.phase), std::to_string(st.contacts.size())});
  }
  return out;
}

std::string compliance_field_csv(const std::vector<ComplianceEllipse>& field,
                                 const CenterOfCompliance& center) {
  std::string out = "# center_of_compliance_mm=" + number(center.location) + "\n";
  out += fmt::format("# interior={} unimodal={}\n", center.interior, center.unimodal);
  row(out, {"point_mm", "x_mm", "y_mm", "axis1_x", "axis1_y", "c1_mm_per_N", "c2_mm_per_N"});
  for (const ComplianceEllipse& e : field) {
    row(out, {number(e.location), number(e.point.x()), number(e.point.y()), number(e.axes[0].x()),
              number(e.axes[0].y()), number(e.compliances[0]), number(e.compliances[1])});
  }
  return out;
}

std::string alignment_csv(const FingerParams& params,
                          const std::vector<EquilibriumSolution>& trajectory,
                          const std::vector<double>& angles_deg) {
  double worst = 0.0;
  for (double a : angles_deg) worst = std::max(worst, a);
  std::string out = "# max_angle_deg=" + number(worst) + "\n";
  row(out, {"excursion_mm", "theta_p_deg", "theta_d_deg", "tip_x_mm", "tip_y_mm", "angle_deg"});
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const FingerState& st = trajectory[i].state;
    const Vec3 tip = forward_kinematics(params, st).fingertip;
    row(out, {number(st.tendon_excursion), number(st.theta_proximal * kDeg),
              number(st.theta_distal * kDeg), number(tip.x()), number(tip.y()),
              number(angles_deg[i])});
  }
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json conditioning_json(const Eigen::MatrixXd& stiffness, const ConditioningReport& report) {
  json j = {{"matrix", matrix_json(stiffness)},
            {"eigenvalues", vector_json(report.eigenvalues)},
            {"principal_axes", matrix_json(report.principal_axes)},
            {"well_conditioned", report.well_conditioned},
            {"well_conditioned_limit", kWellConditionedLimit},
            {"units", "N/mm"}};
  j["condition_number"] = std::isfinite(report.condition_number) ? json(report.condition_number)
                                                                 : json("inf");
  return j;
}

json fit_json(const StiffnessFit& fit, const ConditioningReport& report) {
  json j = conditioning_json(fit.matrix, report);
  j["standard_errors"] = matrix_json(fit.standard_errors);
  j["hysteresis_offset_N"] = vector_json(fit.hysteresis_offset);
  j["hysteresis_standard_errors_N"] = vector_json(fit.hysteresis_standard_errors);
  j["residual_rms_N"] = fit.residual_rms;
  j["sample_count"] = fit.sample_count;
  return j;
}

json well_json(const EnergyWell& well, double excursion,
               const std::optional<GraspStiffness>& stiffness) {
  json probes = json::array();
  for (const ProbeResult& p : well.probes) {
    probes.push_back({{"direction", {p.direction.x(), p.direction.y(), p.direction.z()}},
                      {"escape_work_Nmm", p.escape_work},
                      {"break_displacement_mm", p.break_displacement},
                      {"capped", p.capped}});
  }
  json j = {{"excursion_mm", excursion},
            {"object_center_mm",
             {well.object_center.x(), well.object_center.y(), well.object_center.z()}},
            {"hessian", matrix_json(well.hessian)},
            {"holding_force_N",
             {well.holding_force.x(), well.holding_force.y(), well.holding_force.z()}},
            {"probes", probes},
            {"min_escape_work_Nmm", well.min_escape_work},
            {"units", "N/mm"}};
  if (stiffness) j["grasp_stiffness"] = matrix_json(stiffness->matrix);
  return j;
}

}  // namespace fingersim::cli
