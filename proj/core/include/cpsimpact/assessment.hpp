#pragma once

// Orchestration: every (vulnerability, strategy) pair becomes one entry. DoS
// and sign alternation are maximized over non-empty subsets of the
// vulnerability, rerouting over the admissible permutations, everything else
// is a single run on the full resource set.

#include <optional>
#include <string>
#include <vector>

#include "cpsimpact/mcvalidate.hpp"
#include "cpsimpact/scenario.hpp"
#include "cpsimpact/solver.hpp"

namespace cpsimpact::cli {

inline constexpr int kReportSchemaVersion = 1;

struct McValidation {
  std::size_t samples = 0;
  double E_inf_norm = 0.0;
  double inf_norm_se = 0.0;
  bool jensen_ok = false;          // E_inf_norm >= I2' - 3 se
  double exceed_freq = 0.0;        // at the argmax index
  double exceed_predicted = 0.0;
};

struct AssessmentEntry {
  std::string vulnerability;
  std::string strategy;
  StrategyKind kind = StrategyKind::DoS;
  double I1 = 0.0;
  double I2 = 0.0;
  Index argmax_index = 0;     // 1-based, 0 when no index exists
  Index argmax_I2_index = 0;
  bool feasible = false;
  bool unbounded = false;
  double epsilon_prime = 0.0;
  double max_kkt_residual = 0.0;
  Vector d;                   // maximizer of I1 (empty when none)
  StrategySpec chosen;        // worst-case subset or permutation
  std::size_t candidates = 0;
  std::optional<McValidation> mc;
  double seconds = 0.0;
};

struct SweepRow {
  std::string parameter;  // "eps" or "N"
  double value = 0.0;
  std::string vulnerability;
  std::string strategy;
  double I1 = 0.0;
  double I2 = 0.0;
  bool feasible = false;
  bool unbounded = false;
};

struct AssessmentReport {
  std::string scenario;
  Index horizon = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<AssessmentEntry> entries;
  std::string sweep_parameter;  // empty when no sweep was requested
  std::vector<SweepRow> sweep;
  bool timings = false;

  /// True when every entry reports zero impact.
  [[nodiscard]] bool all_zero() const;
};

struct AssessOptions {
  std::vector<std::string> strategies;       // empty = all
  std::vector<std::string> vulnerabilities;  // empty = all
  bool mc_validate = false;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool timings = false;
};

/// Built once per scenario; the nominal loop does not depend on N or epsilon.
class Assessor {
 public:
  explicit Assessor(const Scenario& scenario);

  [[nodiscard]] AssessmentEntry assess(const Vulnerability& vuln, const StrategyTemplate& strategy,
                                       Index N, double epsilon) const;

  [[nodiscard]] const SystemModel& system() const { return sys_; }
  [[nodiscard]] const NominalLoop& nominal() const { return nominal_; }
  [[nodiscard]] const StationaryLaw& law() const { return law_; }
  [[nodiscard]] const Scenario& scenario() const { return scenario_; }

  /// Candidate specs searched for this pair, in lexicographic order.
  [[nodiscard]] std::vector<StrategySpec> candidates(const Vulnerability& vuln,
                                                     const StrategyTemplate& strategy) const;

 private:
  Scenario scenario_;
  SystemModel sys_;
  NominalLoop nominal_;
  StationaryLaw law_;
};

/// Validation of one entry at its maximizer; skipped for infeasible and
/// unbounded entries.
[[nodiscard]] std::optional<McValidation> validate_entry(const Assessor& assessor,
                                                         const AssessmentEntry& entry, Index N,
                                                         const SimulationConfig& cfg);

[[nodiscard]] AssessmentReport assess(const Scenario& scenario, const AssessOptions& options);

/// Long-format table over `values` of `parameter` ("eps" or "N"). Throws
/// NumericalFailure if an epsilon sweep comes out decreasing.
[[nodiscard]] std::vector<SweepRow> sweep(const Scenario& scenario, const std::string& parameter,
                                          const std::vector<double>& values,
                                          const AssessOptions& options);

/// Human-readable channel description, e.g. "y2,y3,u3" or "y:[1,3,2] u:id".
[[nodiscard]] std::string describe(const StrategySpec& spec);

}  // namespace cpsimpact::cli
