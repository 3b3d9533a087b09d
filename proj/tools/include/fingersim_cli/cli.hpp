#pragma once

#include "fingersim/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fingersim::cli {

enum class Command { Simulate, ComplianceField, Alignment, Fit, Well, Repro };

const char* to_string(Command c);

struct RunConfig {
  Command command = Command::Simulate;
  std::filesystem::path scenario;  // empty: defaults (single-finger commands only)
  std::filesystem::path out = ".";
  std::vector<std::string> overrides;  // key=value, comma lists expand to a cross product
  std::uint64_t seed = 1;
  int jobs = 1;
  std::filesystem::path data;         // fit: cycle CSV
  std::optional<double> excursion;    // well: mm
  double displacement_cap = 10.0;     // well: mm
};

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// Writes every artifact plus manifest.json under config.out and returns the manifest.
// Throws fingersim::Error subclasses.
std::vector<ManifestEntry> run(const RunConfig& config);

// 1 parse, 2 validation, 3 solver, 4 I/O.
int exit_code(ErrorKind kind);

// Machine-readable error report written to stderr on failure.
std::string error_json(const std::exception& e);

std::string sha256_hex(const std::string& bytes);

std::string bundled_scenario(const std::string& name);
std::vector<std::string> bundled_scenario_names();

// Full command line entry point.
int main(int argc, char** argv);

}  // namespace fingersim::cli
