#pragma once

// Scenario files: one JSON document holding the plant, controller, criticality
// map, horizon, stealthiness level, named vulnerabilities and the strategies
// to evaluate against each of them. Matrices are row-major nested arrays.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpsimpact/attacks.hpp"

namespace cpsimpact::cli {

inline constexpr int kScenarioSchemaVersion = 1;

struct Vulnerability {
  std::string name;
  ResourceSet resources;
};

/// A strategy applied to every vulnerability. For fdi_plus_dos the denied
/// channels come from `denial` and the rest of the vulnerability is injected.
struct StrategyTemplate {
  std::string name;
  StrategyKind kind = StrategyKind::DoS;
  ResourceSet denial;
};

struct MonteCarloSettings {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

struct Scenario {
  std::string name;
  PlantModel plant;
  ControllerModel controller;
  Matrix Q_z;
  Index horizon = 0;
  double epsilon = 0.0;
  std::vector<Vulnerability> vulnerabilities;
  std::vector<StrategyTemplate> strategies;
  MonteCarloSettings monte_carlo;
};

/// Throws IoError, ParseError (with line and column), DimensionError or
/// SchemaError (with the offending field path).
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

}  // namespace cpsimpact::cli
