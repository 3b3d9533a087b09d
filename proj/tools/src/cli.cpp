#include "fingersim_cli/cli.hpp"

#include "fingersim/compliance.hpp"
#include "fingersim/grasp_sim.hpp"
#include "fingersim/scenario_io.hpp"
#include "fingersim/stiffness_id.hpp"
#include "fingersim_cli/outputs.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fingersim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Artifacts are produced in memory and written once all work has finished.
using Artifacts = std::map<std::string, std::string>;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  // The lowest failing index wins so error reports do not depend on scheduling.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json load_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

ScenarioDocument resolve(json doc, const std::vector<Override>& overrides) {
  for (const Override& o : overrides) apply_override(doc, o);
  return parse_scenario(doc);
}

EquilibriumDocument single_finger(const ScenarioDocument& doc) {
  if (const auto* e = std::get_if<EquilibriumDocument>(&doc)) return *e;
  throw ValidationError("finger", "this command needs a single-finger scenario");
}

GraspScenario grasp(const ScenarioDocument& doc) {
  if (const auto* g = std::get_if<GraspScenario>(&doc)) return *g;
  throw ValidationError("grasp_type", "this command needs a grasp scenario");
}

double default_well_excursion(const GraspScenario& scenario) {
  const ForceExcursionCurve curve = simulate(scenario);
  const double last = scenario.excursion_schedule.back();
  if (curve.knee_excursion && curve.limit_excursion) {
    return 0.5 * (*curve.knee_excursion + *curve.limit_excursion);
  }
  if (curve.knee_excursion) return 0.5 * (*curve.knee_excursion + last);
  return last;
}

Artifacts simulate_artifacts(const ScenarioDocument& doc) {
  Artifacts out;
  if (const auto* g = std::get_if<GraspScenario>(&doc)) {
    out["curve.csv"] = curve_csv(simulate(*g));
  } else {
    const auto& e = std::get<EquilibriumDocument>(doc);
    std::vector<double> samples = e.excursion_samples;
    if (samples.empty()) samples.push_back(e.problem.tendon_excursion);
    out["trajectory.csv"] = trajectory_csv(e.problem.params, closing_trajectory(e.problem, samples));
  }
  out["scenario.json"] = serialize(doc) + "\n";
  return out;
}

std::vector<double> field_locations() {
  std::vector<double> out;
  for (int i = 0; i <= 60; ++i) out.push_back(2.0 * i);
  return out;
}

Artifacts compliance_field_artifacts(const EquilibriumDocument& doc, const std::string& name) {
  const FingerState state = solve_equilibrium(doc.problem).state;
  const std::vector<double> locations = field_locations();
  const CenterOfCompliance center =
      center_of_compliance(doc.problem.params, state, locations.front(), locations.back());
  return {{name, compliance_field_csv(compliance_field(doc.problem.params, state, locations), center)}};
}

Artifacts alignment_artifacts(const EquilibriumDocument& doc, const std::string& name) {
  std::vector<double> samples = doc.excursion_samples;
  if (samples.empty()) samples = full_closing_range(doc.problem.params, 50);
  const auto trajectory = closing_trajectory(doc.problem, samples);
  const auto angles = principal_direction_alignment(doc.problem.params, trajectory);
  return {{name, alignment_csv(doc.problem.params, trajectory, angles)}};
}

Artifacts well_artifacts(const GraspScenario& scenario, const RunConfig& config) {
  const double e = config.excursion ? *config.excursion : default_well_excursion(scenario);
  const EnergyWell well = energy_well(scenario, e, default_probe_directions(scenario.grasp_type),
                                     config.displacement_cap);
  std::optional<GraspStiffness> k;
  if (scenario.grasp_type != GraspType::PowerCylinder && scenario.object.contact_stiffness <= 0.0) {
    k = grasp_stiffness(scenario, e);
  }
  return {{"well.json", well_json(well, e, k).dump(2) + "\n"}};
}

Artifacts fit_artifacts(const RunConfig& config) {
  if (config.data.empty()) throw ValidationError("data", "fit needs --data <cycles.csv>");
  std::ifstream in(config.data);
  if (!in) throw IoError("cannot read " + config.data.string());
  const StiffnessFit fit = fit_stiffness(read_cycles_csv(in));
  return {{"fit.json", fit_json(fit, conditioning_report(fit)).dump(2) + "\n"}};
}

Eigen::MatrixXd planar_grasp_matrix() {
  Eigen::MatrixXd k(2, 2);
  k << 0.445, 0.0543, 0.0543, 0.409;
  return k;
}

Eigen::MatrixXd spatial_grasp_matrix() {
  Eigen::MatrixXd k(3, 3);
  k << 0.569, 0.0553, 0.0323, 0.0553, 0.696, 0.0755, 0.0323, 0.0755, 0.809;
  return k;
}

Artifacts repro_artifacts(const RunConfig& config) {
  std::vector<std::function<Artifacts()>> tasks;
  tasks.push_back([] {
    const GraspScenario s = grasp(parse_scenario(bundled_scenario("power_65mm")));
    return Artifacts{{"fig11.csv", curve_csv(simulate(s))}};
  });
  tasks.push_back([] {
    const GraspScenario s = grasp(parse_scenario(bundled_scenario("pinch_65mm")));
    return Artifacts{{"fig17.csv", curve_csv(simulate(s))}};
  });
  tasks.push_back([] { return compliance_field_artifacts(EquilibriumDocument{}, "fig13.csv"); });
  tasks.push_back([] { return alignment_artifacts(EquilibriumDocument{}, "fig14.csv"); });
  tasks.push_back([seed = config.seed] {
    const Eigen::MatrixXd k = planar_grasp_matrix();
    const CycleDataset data = synthesize_cycles(k, 0.1, 0.02, 10, 2.0, seed);
    const StiffnessFit fit = fit_stiffness(data);
    json j = fit_json(fit, conditioning_report(fit));
    j["planted_matrix"] = matrix_json(k);
    j["seed"] = seed;
    j["noise_sigma_N"] = 0.02;
    j["hysteresis_N"] = 0.1;
    std::ostringstream csv;
    write_cycles_csv(csv, data);
    return Artifacts{{"eq5_fit.json", j.dump(2) + "\n"}, {"eq5_cycles.csv", csv.str()}};
  });
  tasks.push_back([] {
    json j;
    j["planar"] = conditioning_json(planar_grasp_matrix(), conditioning_report(planar_grasp_matrix()));
    j["spatial"] = conditioning_json(spatial_grasp_matrix(), conditioning_report(spatial_grasp_matrix()));
    return Artifacts{{"eq6_report.json", j.dump(2) + "\n"}};
  });

  std::vector<Artifacts> results(tasks.size());
  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) { results[i] = tasks[i](); });
  Artifacts all;
  for (auto& r : results) all.merge(r);
  return all;
}

std::vector<ManifestEntry> write_all(const RunConfig& config, const Artifacts& artifacts) {
  std::vector<ManifestEntry> manifest;
  for (const auto& [name, content] : artifacts) {
    write_text(config.out / name, content);
    manifest.push_back({name, sha256_hex(content), content.size()});
  }
  json files = json::array();
  for (const ManifestEntry& m : manifest) {
    files.push_back({{"path", m.path}, {"sha256", m.sha256}, {"bytes", m.bytes}});
  }
  json doc = {{"command", to_string(config.command)},
              {"seed", config.seed},
              {"overrides", config.overrides},
              {"files", files}};
  if (!config.scenario.empty()) doc["scenario"] = config.scenario.filename().string();
  write_text(config.out / "manifest.json", doc.dump(2) + "\n");
  return manifest;
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::ComplianceField: return "compliance-field";
    case Command::Alignment: return "alignment";
    case Command::Fit: return "fit";
    case Command::Well: return "well";
    case Command::Repro: return "repro";
  }
  return "?";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::vector<ManifestEntry> run(const RunConfig& config) {
  if (config.jobs < 1) throw ValidationError("jobs", "must be >= 1");
  if (config.command == Command::Repro) {
    if (!config.overrides.empty()) throw ValidationError("set", "repro takes no overrides");
    return write_all(config, repro_artifacts(config));
  }
  if (config.command == Command::Fit) return write_all(config, fit_artifacts(config));

  const bool single_finger_command =
      config.command == Command::ComplianceField || config.command == Command::Alignment;
  json base;
  if (!config.scenario.empty()) {
    if (!fs::is_regular_file(config.scenario)) {
      throw IoError("scenario file not found: " + config.scenario.string());
    }
    base = load_json(read_text(config.scenario), config.scenario.string());
  } else if (single_finger_command) {
    base = to_json(EquilibriumDocument{});
  } else {
    throw ValidationError("scenario", "--scenario is required for this command");
  }

  const auto runs = expand_overrides(config.overrides);
  std::vector<Artifacts> results(runs.size());
  parallel_for(runs.size(), config.jobs, [&](std::size_t i) {
    const ScenarioDocument doc = resolve(base, runs[i]);
    switch (config.command) {
      case Command::Simulate:
        results[i] = simulate_artifacts(doc);
        break;
      case Command::ComplianceField:
        results[i] = compliance_field_artifacts(single_finger(doc), "compliance_field.csv");
        break;
      case Command::Alignment:
        results[i] = alignment_artifacts(single_finger(doc), "alignment.csv");
        break;
      case Command::Well:
        results[i] = well_artifacts(grasp(doc), config);
        break;
      default:
        break;
    }
  });

  Artifacts all;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::string prefix;
    if (runs.size() > 1) {
      prefix = fmt::format("run_{:03d}/", i);
      json applied = json::object();
      for (const Override& o : runs[i]) applied[o.path] = o.value;
      all[prefix + "overrides.json"] = applied.dump(2) + "\n";
    }
    for (auto& [name, content] : results[i]) all[prefix + name] = std::move(content);
  }
  return write_all(config, all);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return 1;
    case ErrorKind::Validation: return 2;
    case ErrorKind::Io: return 4;
    default: return 3;
  }
}

std::string error_json(const std::exception& e) {
  json j = {{"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = fingersim::to_string(err->kind());
    j["exit_code"] = exit_code(err->kind());
    if (const auto* v = dynamic_cast<const ValidationError*>(&e)) j["field"] = v->field();
    if (const auto* n = dynamic_cast<const NonConvergence*>(&e); n && n->sample()) {
      j["sample"] = *n->sample();
    }
    if (const auto* u = dynamic_cast<const UnstableEquilibrium*>(&e)) {
      j["min_eigenvalue"] = u->min_eigenvalue();
    }
  } else {
    j["error"] = "InternalError";
    j["exit_code"] = 3;
  }
  return j.dump();
}

int main(int argc, char** argv) {
  CLI::App app{"Quasi-static simulation and analysis of tendon-driven elastic fingers"};
  app.require_subcommand(1);
  RunConfig config;
  double excursion = 0.0;

  struct Spec {
    Command command;
    const char* help;
  };
  const Spec specs[] = {
      {Command::Simulate, "Force-excursion curve of a grasp, or a single-finger trajectory"},
      {Command::ComplianceField, "Compliance ellipses along the distal link axis"},
      {Command::Alignment, "Fingertip motion vs principal compliance direction while closing"},
      {Command::Fit, "Fit a stiffness matrix to cyclic displacement-force data"},
      {Command::Well, "Energy-well probes and stiffness of a grasp"},
      {Command::Repro, "Regenerate the bundled figure and matrix artifacts"},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const Spec& s : specs) {
    CLI::App* sub = app.add_subcommand(to_string(s.command), s.help);
    subs.emplace_back(sub, s.command);
    sub->add_option("--out", config.out, "Output directory")->default_val(".");
    sub->add_option("--seed", config.seed, "Random seed")->default_val(1);
    sub->add_option("--jobs", config.jobs, "Parallel workers")->default_val(1);
    if (s.command != Command::Repro && s.command != Command::Fit) {
      sub->add_option("--scenario", config.scenario, "Scenario JSON file");
      sub->add_option("--set", config.overrides,
                      "Override key=value (dotted path; comma lists sweep)");
    }
    if (s.command == Command::Fit) {
      sub->add_option("--data", config.data, "Cycle CSV")->required();
    }
    if (s.command == Command::Well) {
      sub->add_option("--excursion", excursion, "Tendon excursion (mm)");
      sub->add_option("--cap", config.displacement_cap, "Probe displacement cap (mm)")
          ->default_val(10.0);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "UsageError"}, {"message", e.what()}, {"exit_code", 1}}.dump()
              << "\n";
    return 1;
  }

  for (const auto& [sub, command] : subs) {
    if (sub->parsed()) {
      config.command = command;
      if (command == Command::Well && sub->count("--excursion") > 0) config.excursion = excursion;
    }
  }

  try {
    const auto manifest = run(config);
    std::cout << fmt::format("wrote {} files to {}\n", manifest.size() + 1, config.out.string());
    return 0;
  } catch (const Error& e) {
    std::cerr << error_json(e) << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << error_json(e) << "\n";
    return 3;
  }
}

}  // namespace fingersim::cli
