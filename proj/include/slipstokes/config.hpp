#pragma once

#include "slipstokes/control.hpp"
#include "slipstokes/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slipstokes {

struct RegionSpec {
  std::string shape = "rectangle";  // or "disk"
  std::array<double, 2> x{0.0, 0.5};
  std::array<double, 2> y{0.0, 0.5};
  std::array<double, 2> center{0.5, 0.5};
  double radius = 0.25;

  bool operator==(const RegionSpec&) const = default;
};

/// Initial velocity: a single eigenmode or a seeded random draw.
struct InitialSpec {
  std::string kind = "random";  // or "mode"
  int mode = 0;
  int modes = 64;

  bool operator==(const InitialSpec&) const = default;
};

struct SimulateParams {
  int samples = 33;
  int steps = 2000;  // Crank-Nicolson steps beyond the eigenbasis limit

  bool operator==(const SimulateParams&) const = default;
};

struct DiagnosticsParams {
  int cases = 50;
  int time_samples = 33;

  bool operator==(const DiagnosticsParams&) const = default;
};

struct UCFitParams {
  int samples = 200;
  int holdout = 200;
  int modes = 64;

  bool operator==(const UCFitParams&) const = default;
};

struct ObsConstantParams {
  int modes = 32;
  int starts = 20;
  int max_iterations = 500;

  bool operator==(const ObsConstantParams&) const = default;
};

struct MinNormParams {
  int modes = 32;
  int cases = 5;
  int pieces = 64;
  double eps_initial = 0.1;
  double eps_factor = 4.0;
  double eps_floor = 1e-8;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;

  bool operator==(const MinNormParams&) const = default;
};

struct MinTimeParams {
  double budget = 1e-6;
  double t_lo = 0.1;
  double t_hi = 2.0;
  int iterations = 20;
  int modes = 1;
  /// E as fractions of the horizon.
  std::vector<std::pair<double, double>> relative_time_set{{0.0, 1.0}};

  bool operator==(const MinTimeParams&) const = default;
};

struct Tolerances {
  double energy = 1e-10;
  double log_convexity = 1e-12;
  double duality = 1e-8;
  double rho = 1e-3;
  double bang_bang = 1e-10;
  double dispersion = 1.5;
  int holdout_violations = 2;
  double refit_growth = 0.1;

  bool operator==(const Tolerances&) const = default;
};

struct RunConfig {
  std::string experiment = "simulate";
  std::uint64_t seed = 0;
  int n = 16;
  double horizon = 1.0;
  std::vector<std::pair<double, double>> time_set{{0.2, 0.8}};
  RegionSpec region;
  InitialSpec initial;
  SimulateParams simulate;
  DiagnosticsParams diagnostics;
  UCFitParams uc_fit;
  ObsConstantParams obs_constant;
  MinNormParams min_norm;
  MinTimeParams min_time;
  Tolerances tolerances;
  std::string out_dir = "out";
  std::vector<std::string> formats{"json", "csv"};

  bool operator==(const RunConfig&) const = default;

  bool wants(std::string_view format) const;
  ControlSettings control_settings(int modes) const;
};

/// The six experiment names in catalog order.
const std::vector<std::string>& experiment_names();

/// Parses key = value text with [tables]; text starting with '{' is read as
/// JSON. Throws Config errors carrying line:column or the offending field.
RunConfig parse_config(std::string_view text, const std::string& origin = "<inline>");
RunConfig parse_config_file(const std::filesystem::path& path);

/// Throws Config naming the field at fault.
void validate_config(const RunConfig& config);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// True for dotted keys that the schema accepts, e.g. "grid.n".
bool config_key_known(std::string_view dotted);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);
/// Hash of the canonical form with output.dir left out.
std::string config_hash(const RunConfig& config);

RegionShape region_shape(const RegionSpec& spec);

}  // namespace slipstokes
