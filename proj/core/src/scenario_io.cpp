#include "fingersim/scenario_io.hpp"

#include "fingersim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace fingersim {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void expect_object(const json& j, const std::string& path,
                   std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(path.empty() ? "document" : path, "must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.count(item.key())) throw ValidationError(join(path, item.key()), "unknown key");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ValidationError(join(path, key), "is required");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(path, "must be finite");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path, "must be an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path, "must be a string");
  return j.get<std::string>();
}

Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3)) {
    throw ValidationError(path, "must be an array of 2 or 3 numbers");
  }
  Vec3 v = Vec3::Zero();
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = number(j[i], index(path, i));
  return v;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<double> schedule(const json& j, const std::string& path) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], index(path, i)));
    return out;
  }
  expect_object(j, path, {"start", "stop", "count"});
  const double start = number(require(j, path, "start"), join(path, "start"));
  const double stop = number(require(j, path, "stop"), join(path, "stop"));
  const int count = integer(require(j, path, "count"), join(path, "count"));
  if (count < 1) throw ValidationError(join(path, "count"), "must be >= 1");
  if (count == 1) return {start};
  for (int i = 0; i < count; ++i) out.push_back(start + (stop - start) * i / (count - 1));
  return out;
}

SolverSettings solver_settings(const json& j, const std::string& path) {
  expect_object(j, path, {"tolerance", "max_iterations"});
  SolverSettings s;
  if (j.contains("tolerance")) s.tolerance = number(j["tolerance"], join(path, "tolerance"));
  if (j.contains("max_iterations")) {
    s.max_iterations = integer(j["max_iterations"], join(path, "max_iterations"));
  }
  return s;
}

json to_json(const SolverSettings& s) {
  return {{"tolerance", s.tolerance}, {"max_iterations", s.max_iterations}};
}

Link parse_link(const json& j, const std::string& path) {
  const std::string name = text(j, path);
  if (name == "Proximal") return Link::Proximal;
  if (name == "Distal") return Link::Distal;
  if (name == "Fingertip") return Link::Fingertip;
  throw ValidationError(path, "must be Proximal, Distal or Fingertip");
}

Obstacle parse_obstacle(const json& j, const std::string& path) {
  expect_object(j, path,
                {"shape", "link", "contact_stiffness", "point", "normal", "center", "radius", "axis"});
  Obstacle ob;
  ob.link = parse_link(require(j, path, "link"), join(path, "link"));
  if (j.contains("contact_stiffness")) {
    ob.contact_stiffness = number(j["contact_stiffness"], join(path, "contact_stiffness"));
  }
  const std::string shape = text(require(j, path, "shape"), join(path, "shape"));
  auto reject = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (j.contains(k)) throw ValidationError(join(path, k), "not used by shape " + shape);
    }
  };
  if (shape == "half_space") {
    reject({"center", "radius", "axis"});
    HalfSpace h;
    h.point = vec3(require(j, path, "point"), join(path, "point"));
    h.normal = vec3(require(j, path, "normal"), join(path, "normal"));
    ob.shape = h;
  } else if (shape == "cylinder" || shape == "sphere") {
    reject({"point", "normal"});
    RoundObstacle r;
    r.center = vec3(require(j, path, "center"), join(path, "center"));
    r.radius = number(require(j, path, "radius"), join(path, "radius"));
    if (shape == "sphere") {
      reject({"axis"});
      r.axis.reset();
    } else if (j.contains("axis")) {
      r.axis = vec3(j["axis"], join(path, "axis"));
    }
    ob.shape = r;
  } else {
    throw ValidationError(join(path, "shape"), "must be half_space, cylinder or sphere");
  }
  return ob;
}

json to_json(const Obstacle& ob) {
  json j;
  if (const auto* h = std::get_if<HalfSpace>(&ob.shape)) {
    j["shape"] = "half_space";
    j["point"] = vec_json(h->point);
    j["normal"] = vec_json(h->normal);
  } else {
    const auto& r = std::get<RoundObstacle>(ob.shape);
    j["shape"] = r.axis ? "cylinder" : "sphere";
    j["center"] = vec_json(r.center);
    j["radius"] = r.radius;
    if (r.axis) j["axis"] = vec_json(*r.axis);
  }
  j["link"] = to_string(ob.link);
  j["contact_stiffness"] = ob.contact_stiffness;
  return j;
}

GraspScenario parse_grasp(const json& j) {
  expect_object(j, "", {"grasp_type", "fingers", "object", "excursion_schedule", "solver"});
  GraspScenario s;
  s.grasp_type = parse_grasp_type(text(require(j, "", "grasp_type"), "grasp_type"));

  const json& fingers = require(j, "", "fingers");
  if (!fingers.is_array()) throw ValidationError("fingers", "must be an array");
  for (std::size_t i = 0; i < fingers.size(); ++i) {
    const std::string path = index("fingers", i);
    expect_object(fingers[i], path, {"base", "params"});
    FingerSpec spec;
    const json& base = require(fingers[i], path, "base");
    const std::string bpath = join(path, "base");
    expect_object(base, bpath, {"position", "x_axis", "y_axis"});
    spec.base.position = vec3(require(base, bpath, "position"), join(bpath, "position"));
    spec.base.x_axis = vec3(require(base, bpath, "x_axis"), join(bpath, "x_axis"));
    spec.base.y_axis = vec3(require(base, bpath, "y_axis"), join(bpath, "y_axis"));
    if (fingers[i].contains("params")) {
      spec.params = parse_finger_params(fingers[i]["params"], join(path, "params"));
    }
    s.fingers.push_back(spec);
  }

  const json& object = require(j, "", "object");
  expect_object(object, "object",
                {"kind", "width", "center", "axis", "split_normal", "contact_stiffness"});
  const std::string kind = text(require(object, "object", "kind"), "object.kind");
  if (kind == "cylinder") {
    s.object.kind = ObjectKind::Cylinder;
  } else if (kind == "sphere") {
    s.object.kind = ObjectKind::Sphere;
    if (object.contains("axis")) throw ValidationError("object.axis", "not used by a sphere");
  } else {
    throw ValidationError("object.kind", "must be cylinder or sphere");
  }
  s.object.width = number(require(object, "object", "width"), "object.width");
  s.object.center = vec3(require(object, "object", "center"), "object.center");
  if (object.contains("axis")) s.object.axis = vec3(object["axis"], "object.axis");
  if (object.contains("split_normal")) {
    s.object.split_normal = vec3(object["split_normal"], "object.split_normal");
  }
  if (object.contains("contact_stiffness")) {
    s.object.contact_stiffness = number(object["contact_stiffness"], "object.contact_stiffness");
  }

  s.excursion_schedule =
      schedule(require(j, "", "excursion_schedule"), "excursion_schedule");
  if (j.contains("solver")) s.solver = solver_settings(j["solver"], "solver");
  s.validate();
  return s;
}

EquilibriumDocument parse_equilibrium(const json& j) {
  expect_object(j, "", {"finger", "tendon_excursion", "excursion_samples", "obstacles", "solver"});
  EquilibriumDocument doc;
  doc.problem.params = parse_finger_params(require(j, "", "finger"), "finger");
  if (j.contains("tendon_excursion")) {
    doc.problem.tendon_excursion = number(j["tendon_excursion"], "tendon_excursion");
  }
  if (j.contains("excursion_samples")) {
    doc.excursion_samples = schedule(j["excursion_samples"], "excursion_samples");
  }
  if (j.contains("obstacles")) {
    const json& obs = j["obstacles"];
    if (!obs.is_array()) throw ValidationError("obstacles", "must be an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      doc.problem.obstacles.push_back(parse_obstacle(obs[i], index("obstacles", i)));
    }
  }
  if (j.contains("solver")) {
    const SolverSettings s = solver_settings(j["solver"], "solver");
    doc.problem.solver_tolerance = s.tolerance;
    doc.problem.max_iterations = s.max_iterations;
  }
  doc.problem.validate();
  for (std::size_t i = 1; i < doc.excursion_samples.size(); ++i) {
    if (doc.excursion_samples[i] < doc.excursion_samples[i - 1]) {
      throw ValidationError("excursion_samples", "must be sorted ascending");
    }
  }
  return doc;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    out.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return out;
}

void assign(json& node, const std::vector<std::string>& tokens, std::size_t k, const json& value,
            const std::string& full) {
  const std::string& t = tokens[k];
  if (t.empty()) throw ValidationError(full, "empty path segment");
  const bool last = k + 1 == tokens.size();
  if (node.is_array()) {
    std::vector<std::size_t> targets;
    if (t == "*") {
      for (std::size_t i = 0; i < node.size(); ++i) targets.push_back(i);
    } else {
      if (!std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) {
        throw ValidationError(full, "'" + t + "' is not an array index");
      }
      const std::size_t i = std::stoul(t);
      if (i >= node.size()) throw ValidationError(full, "index " + t + " out of range");
      targets.push_back(i);
    }
    for (std::size_t i : targets) {
      if (last) {
        node[i] = value;
      } else {
        assign(node[i], tokens, k + 1, value, full);
      }
    }
    return;
  }
  if (node.is_null()) node = json::object();
  if (!node.is_object()) throw ValidationError(full, "'" + t + "' descends into a scalar");
  if (last) {
    node[t] = value;
  } else {
    assign(node[t], tokens, k + 1, value, full);
  }
}

}  // namespace

GraspType parse_grasp_type(const std::string& name) {
  if (name == "OpposedPinch") return GraspType::OpposedPinch;
  if (name == "SphericalPinch") return GraspType::SphericalPinch;
  if (name == "PowerCylinder") return GraspType::PowerCylinder;
  throw ValidationError("grasp_type", "must be OpposedPinch, SphericalPinch or PowerCylinder");
}

FingerParams parse_finger_params(const json& j, const std::string& path) {
  expect_object(j, path,
                {"proximal_length", "distal_length", "k_proximal", "k_distal_bend",
                 "k_distal_twist", "k_proximal_twist", "r_proximal", "r_distal", "rest_angles",
                 "travel_limit_distal", "travel_limit_stiffness"});
  FingerParams p;
  auto read = [&](const char* key, double& field) {
    if (j.contains(key)) field = number(j[key], join(path, key));
  };
  read("proximal_length", p.proximal_length);
  read("distal_length", p.distal_length);
  read("k_proximal", p.k_proximal);
  read("k_distal_bend", p.k_distal_bend);
  read("k_distal_twist", p.k_distal_twist);
  read("k_proximal_twist", p.k_proximal_twist);
  read("r_proximal", p.r_proximal);
  read("r_distal", p.r_distal);
  read("travel_limit_distal", p.travel_limit_distal);
  if (j.contains("travel_limit_stiffness")) {
    p.travel_limit_stiffness =
        number(j["travel_limit_stiffness"], join(path, "travel_limit_stiffness"));
  }
  if (j.contains("rest_angles")) {
    const json& r = j["rest_angles"];
    const std::string rpath = join(path, "rest_angles");
    if (!r.is_array() || r.size() != 2) throw ValidationError(rpath, "must be 2 numbers");
    p.rest_angles = {number(r[0], index(rpath, 0)), number(r[1], index(rpath, 1))};
  }
  p.validate(path);
  return p;
}

json to_json(const FingerParams& p) {
  json j = {{"proximal_length", p.proximal_length},
            {"distal_length", p.distal_length},
            {"k_proximal", p.k_proximal},
            {"k_distal_bend", p.k_distal_bend},
            {"k_distal_twist", p.k_distal_twist},
            {"k_proximal_twist", p.k_proximal_twist},
            {"r_proximal", p.r_proximal},
            {"r_distal", p.r_distal},
            {"rest_angles", json::array({p.rest_angles[0], p.rest_angles[1]})},
            {"travel_limit_distal", p.travel_limit_distal}};
  if (p.travel_limit_stiffness) j["travel_limit_stiffness"] = *p.travel_limit_stiffness;
  return j;
}

json to_json(const GraspScenario& s) {
  json fingers = json::array();
  for (const FingerSpec& f : s.fingers) {
    fingers.push_back({{"base",
                        {{"position", vec_json(f.base.position)},
                         {"x_axis", vec_json(f.base.x_axis)},
                         {"y_axis", vec_json(f.base.y_axis)}}},
                       {"params", to_json(f.params)}});
  }
  json object = {{"kind", to_string(s.object.kind)},
                 {"width", s.object.width},
                 {"center", vec_json(s.object.center)},
                 {"split_normal", vec_json(s.object.split_normal)},
                 {"contact_stiffness", s.object.contact_stiffness}};
  if (s.object.kind == ObjectKind::Cylinder) object["axis"] = vec_json(s.object.axis);
  return {{"grasp_type", to_string(s.grasp_type)},
          {"fingers", fingers},
          {"object", object},
          {"excursion_schedule", s.excursion_schedule},
          {"solver", to_json(s.solver)}};
}

json to_json(const EquilibriumDocument& doc) {
  json obstacles = json::array();
  for (const Obstacle& ob : doc.problem.obstacles) obstacles.push_back(to_json(ob));
  return {{"finger", to_json(doc.problem.params)},
          {"tendon_excursion", doc.problem.tendon_excursion},
          {"excursion_samples", doc.excursion_samples},
          {"obstacles", obstacles},
          {"solver", to_json(SolverSettings{doc.problem.solver_tolerance,
                                            doc.problem.max_iterations})}};
}

std::string serialize(const ScenarioDocument& doc) {
  return std::visit([](const auto& d) { return to_json(d).dump(2); }, doc);
}

ScenarioDocument parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ValidationError("document", "must be a JSON object");
  if (doc.contains("grasp_type")) return parse_grasp(doc);
  if (doc.contains("finger")) return parse_equilibrium(doc);
  throw ValidationError("grasp_type", "is required (or 'finger' for a single-finger problem)");
}

ScenarioDocument parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  return parse_scenario(doc);
}

GraspScenario parse_grasp_scenario(const std::string& text) {
  ScenarioDocument doc = parse_scenario(text);
  if (auto* s = std::get_if<GraspScenario>(&doc)) return *s;
  throw ValidationError("grasp_type", "is required for a grasp scenario");
}

Override parse_override(const std::string& text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ParseError("override '" + text + "' must look like key=value");
  }
  Override o;
  o.path = text.substr(0, eq);
  const std::string value = text.substr(eq + 1);
  try {
    o.value = json::parse(value);
  } catch (const json::parse_error&) {
    o.value = value;
  }
  return o;
}

std::vector<std::vector<Override>> expand_overrides(const std::vector<std::string>& sets) {
  std::vector<std::vector<Override>> runs(1);
  for (const std::string& set : sets) {
    const std::size_t eq = set.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError("override '" + set + "' must look like key=value");
    }
    const std::string key = set.substr(0, eq);
    const std::string value = set.substr(eq + 1);
    std::vector<std::string> choices;
    if (!value.empty() && (value.front() == '[' || value.front() == '{')) {
      choices.push_back(value);
    } else {
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = value.find(',', start);
        choices.push_back(value.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    std::vector<std::vector<Override>> next;
    for (const auto& run : runs) {
      for (const std::string& c : choices) {
        auto extended = run;
        extended.push_back(parse_override(key + "=" + c));
        next.push_back(std::move(extended));
      }
    }
    runs = std::move(next);
  }
  return runs;
}

void apply_override(json& doc, const Override& o) {
  assign(doc, split_path(o.path), 0, o.value, o.path);
}

}  // namespace fingersim
