#pragma once

#include "fingersim/equilibrium.hpp"
#include "fingersim/grasp_sim.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace fingersim {

// A single-finger problem file: the problem plus the excursions to sweep.
struct EquilibriumDocument {
  EquilibriumProblem problem;
  std::vector<double> excursion_samples;
};

using ScenarioDocument = std::variant<GraspScenario, EquilibriumDocument>;

// Strict parsing: unknown keys, wrong types and invariant violations raise ValidationError
// naming the dotted field path; malformed JSON raises ParseError.
ScenarioDocument parse_scenario(const std::string& text);
ScenarioDocument parse_scenario(const nlohmann::json& doc);
GraspScenario parse_grasp_scenario(const std::string& text);

FingerParams parse_finger_params(const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const FingerParams& params);
nlohmann::json to_json(const GraspScenario& scenario);
nlohmann::json to_json(const EquilibriumDocument& doc);
std::string serialize(const ScenarioDocument& doc);

GraspType parse_grasp_type(const std::string& name);

struct Override {
  std::string path;  // dotted; array indices are numbers, "*" applies to every element
  nlohmann::json value;
};

// "key=value"; the value is read as JSON when possible, otherwise as a string.
Override parse_override(const std::string& text);

// Comma-separated values expand into a cross product; each result is one run.
std::vector<std::vector<Override>> expand_overrides(const std::vector<std::string>& sets);

void apply_override(nlohmann::json& doc, const Override& o);

}  // namespace fingersim
