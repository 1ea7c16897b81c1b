#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "paraspec/numerics.hpp"
#include "paraspec/systems.hpp"

namespace paraspec {

enum class Scenario { furstenberg, skew, flow_timechange, flow_twisted, control_rotation };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);  // throws InvalidSpec

inline bool is_map_scenario(Scenario s) {
  return s == Scenario::furstenberg || s == Scenario::skew || s == Scenario::control_rotation;
}

struct MapParams {
  double y = 0.0;
  int d = 2;
  std::vector<std::vector<int>> b;  // Furstenberg: rows 1..d-1 of the strictly lower part
  std::vector<std::string> h;       // Furstenberg: h[i] on T^{i+1}, canonical text
  int j = 2;
  int k = 1;
  int b_skew = 1;
  std::string eta = "0";            // skew: eta_lift, canonical text
  bool operator==(const MapParams&) const = default;
};

struct FlowParams {
  double epsilon = 0.1;
  std::string base = "discriminant";
  long normalize_samples = 200000;
  double y_cap = 50.0;
  int mode = 1;  // twisted circle-Fourier mode
  bool operator==(const FlowParams&) const = default;
};

struct CorrelationParams {
  long N = 4096;
  int grid_log2 = 12;
  std::string psi = "1*exp(1)";  // maps: canonical trig poly on T^m
  std::string observable = "discriminant";
  double T = 64.0;
  double dt = 0.5;
  long n_samples = 256;
  bool operator==(const CorrelationParams&) const = default;
};

struct ConditionParams {
  double t_min = 1.0;
  double t_max = 1000.0;
  int per_decade = 5;
  long n_samples = 64;
  double derivative_step = 1e-2;
  bool operator==(const ConditionParams&) const = default;
};

struct SpectrumParams {
  std::string window = "hann";
  int pad = 4;
  int bochner_m = 128;
  bool operator==(const SpectrumParams&) const = default;
};

struct SimulateParams {
  long n_orbits = 4;
  long steps = 64;   // maps
  double T = 20.0;   // flows
  double dt = 1.0;
  bool operator==(const SimulateParams&) const = default;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::furstenberg;
  std::uint64_t seed = 0;
  std::string output_dir;
  MapParams map;
  FlowParams flow;
  CorrelationParams correlation;
  ConditionParams conditions;
  SpectrumParams spectrum;
  SimulateParams simulate;
  Tolerances tol;
  bool operator==(const ExperimentConfig&) const = default;
};

// INI text. Unknown sections or keys, malformed values and violated
// preconditions raise InvalidSpec naming the field ("system.d: ...").
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);  // MissingArtifact if absent

// Canonical INI text: scenario-relevant keys only, %.17g numbers, canonical
// trig polynomials. parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& c);

void validate_config(const ExperimentConfig& c);

// FNV-1a 64 of the canonical text, 16 hex digits. Excludes output_dir.
std::string config_hash(const ExperimentConfig& c);

// The system described by the config. Flow scenarios normalize alpha here
// (seeded Monte Carlo with the master seed).
System build_system(const ExperimentConfig& c, int workers = 1);

}  // namespace paraspec
