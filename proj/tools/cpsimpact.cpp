// cpsimpact assess --scenario <path> [options]
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 every
// impact is zero (the report is still written).

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpsimpact/assessment.hpp"
#include "cpsimpact/error.hpp"
#include "cpsimpact/report.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAllZero = 4;

int exit_code(cpsimpact::ErrorKind kind) {
  using cpsimpact::ErrorKind;
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::SchemaError:
    case ErrorKind::DimensionError:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InvalidPermutation:
    case ErrorKind::EmptyResources:
    case ErrorKind::OverlappingSets:
    case ErrorKind::IoError:
      return kExitValidation;
    default:
      return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case impact of stealthy attacks on a stochastic control loop"};
  app.require_subcommand(1);
  auto* cmd = app.add_subcommand("assess", "Assess every (vulnerability, strategy) pair");

  std::string scenario_path, sweep_param, format = "json", out_path;
  std::vector<std::string> strategies, vulnerabilities;
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool mc_validate = false, timings = false;

  cmd->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--strategy", strategies, "Only these strategies (repeatable)");
  cmd->add_option("--vulnerability", vulnerabilities, "Only these vulnerabilities (repeatable)");
  cmd->add_flag("--mc-validate", mc_validate, "Monte Carlo check at each maximizer");
  auto* sweep_opt = cmd->add_option("--sweep", sweep_param, "Sweep a parameter")
                        ->check(CLI::IsMember({"eps", "N"}));
  cmd->add_option("--values", values, "Comma-separated sweep values")->delimiter(',')->needs(sweep_opt);
  sweep_opt->needs(cmd->get_option("--values"));
  cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--out", out_path, "Output file (default stdout)");
  cmd->add_option("--seed", seed, "Monte Carlo seed (overrides the scenario)");
  cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--timings", timings, "Include wall-clock seconds per entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  namespace cli = cpsimpact::cli;
  try {
    const auto scenario = cli::load_scenario(scenario_path);
    cli::AssessOptions options;
    options.strategies = strategies;
    options.vulnerabilities = vulnerabilities;
    options.mc_validate = mc_validate;
    options.seed = seed;
    options.jobs = jobs;
    options.timings = timings;

    auto report = cli::assess(scenario, options);
    if (!sweep_param.empty()) {
      report.sweep_parameter = sweep_param;
      report.sweep = cli::sweep(scenario, sweep_param, values, options);
    }
    cli::emit_report(report, format == "csv" ? cli::ReportFormat::Csv : cli::ReportFormat::Json,
                     out_path);
    return report.all_zero() ? kExitAllZero : 0;
  } catch (const cpsimpact::Error& e) {
    std::cerr << "cpsimpact: " << e.what() << '\n';
    return exit_code(e.kind());
  }
}
