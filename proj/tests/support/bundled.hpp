#pragma once

#include "fingersim/scenario_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fingersim::testing {

inline std::string scenario_path(const std::string& name) {
  return std::string(FINGERSIM_SCENARIO_DIR) + "/" + name + ".json";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GraspScenario bundled(const std::string& name) {
  return parse_grasp_scenario(read_file(scenario_path(name)));
}

}  // namespace fingersim::testing
