#include "cpsimpact/assessment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>
#include <tuple>

#include "cpsimpact/error.hpp"

namespace cpsimpact::cli {
namespace {

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const int workers = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::string> errors(n);
  std::vector<ErrorKind> kinds(n, ErrorKind::NumericalFailure);
  auto run = [&](std::size_t first) {
    for (std::size_t i = first; i < n; i += static_cast<std::size_t>(workers)) {
      try {
        fn(i);
      } catch (const Error& e) {
        errors[i] = e.what();
        kinds[i] = e.kind();
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, static_cast<std::size_t>(w));
    for (auto& t : pool) t.join();
  }
  // rethrow the first failure in task order so the message is deterministic
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      const auto colon = errors[i].find(": ");
      throw Error(kinds[i], colon == std::string::npos ? errors[i] : errors[i].substr(colon + 2));
    }
  }
}

template <typename T>
std::vector<const T*> select(const std::vector<T>& all, const std::vector<std::string>& wanted,
                             const char* what) {
  std::vector<const T*> out;
  if (wanted.empty()) {
    for (const auto& x : all) out.push_back(&x);
    return out;
  }
  for (const auto& name : wanted) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const T& x) { return x.name == name; });
    if (it == all.end()) {
      throw Error(ErrorKind::SchemaError, std::string("unknown ") + what + " \"" + name + "\"");
    }
    if (std::find(out.begin(), out.end(), &*it) == out.end()) out.push_back(&*it);
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

SimulationConfig mc_config(const Scenario& sc, const AssessOptions& options) {
  SimulationConfig cfg;
  cfg.samples = sc.monte_carlo.samples;
  cfg.seed = options.seed.value_or(sc.monte_carlo.seed);
  cfg.jobs = options.jobs;
  return cfg;
}

}  // namespace

bool AssessmentReport::all_zero() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const AssessmentEntry& e) { return !e.unbounded && e.I1 == 0.0; });
}

std::string describe(const StrategySpec& spec) {
  if (spec.kind == StrategyKind::Rerouting) {
    auto perm = [](const std::vector<int>& p) {
      bool id = true;
      for (std::size_t i = 0; i < p.size(); ++i) id = id && p[i] == static_cast<int>(i + 1);
      return id ? std::string("id") : "[" + join(p) + "]";
    };
    return "y:" + perm(spec.sensor_permutation) + " u:" + perm(spec.actuator_permutation);
  }
  std::string s;
  auto add = [&](const ResourceSet& r, const std::string& prefix) {
    for (int i : r.sensors) s += (s.empty() ? "" : ",") + prefix + "y" + std::to_string(i);
    for (int i : r.actuators) s += (s.empty() ? "" : ",") + prefix + "u" + std::to_string(i);
  };
  add(spec.resources, "");
  add(spec.denial, "!");
  return s;
}

Assessor::Assessor(const Scenario& scenario)
    : scenario_(scenario),
      sys_(make_system(scenario.plant, scenario.controller, scenario.Q_z)),
      nominal_(assemble_nominal(sys_)),
      law_(stationary_law(nominal_)) {}

std::vector<StrategySpec> Assessor::candidates(const Vulnerability& vuln,
                                               const StrategyTemplate& strategy) const {
  const Index ny = sys_.plant.n_y(), nu = sys_.plant.n_u();
  std::vector<StrategySpec> out;
  switch (strategy.kind) {
    case StrategyKind::DoS:
    case StrategyKind::SignAlternation: {
      auto subsets = nonempty_subsets(vuln.resources);
      std::sort(subsets.begin(), subsets.end(), [](const ResourceSet& a, const ResourceSet& b) {
        return std::tie(a.sensors, a.actuators) < std::tie(b.sensors, b.actuators);
      });
      for (auto& s : subsets) {
        StrategySpec spec;
        spec.kind = strategy.kind;
        spec.resources = std::move(s);
        out.push_back(std::move(spec));
      }
      break;
    }
    case StrategyKind::Rerouting:
      out = rerouting_candidates(vuln.resources, ny, nu);
      break;
    case StrategyKind::FdiPlusDos: {
      StrategySpec spec;
      spec.kind = strategy.kind;
      for (int i : strategy.denial.sensors) {
        if (!contains(vuln.resources.sensors, i)) {
          throw Error(ErrorKind::SchemaError, strategy.name + ": denied sensor y" +
                                                  std::to_string(i) + " is not in " + vuln.name);
        }
      }
      for (int i : strategy.denial.actuators) {
        if (!contains(vuln.resources.actuators, i)) {
          throw Error(ErrorKind::SchemaError, strategy.name + ": denied actuator u" +
                                                  std::to_string(i) + " is not in " + vuln.name);
        }
      }
      spec.denial = strategy.denial;
      for (int i : vuln.resources.sensors) {
        if (!contains(strategy.denial.sensors, i)) spec.resources.sensors.push_back(i);
      }
      for (int i : vuln.resources.actuators) {
        if (!contains(strategy.denial.actuators, i)) spec.resources.actuators.push_back(i);
      }
      out.push_back(std::move(spec));
      break;
    }
    default: {
      StrategySpec spec;
      spec.kind = strategy.kind;
      spec.resources = vuln.resources;
      out.push_back(std::move(spec));
    }
  }
  return out;
}

AssessmentEntry Assessor::assess(const Vulnerability& vuln, const StrategyTemplate& strategy,
                                 Index N, double epsilon) const {
  const auto start = std::chrono::steady_clock::now();
  AssessmentEntry entry;
  entry.vulnerability = vuln.name;
  entry.strategy = strategy.name;
  entry.kind = strategy.kind;

  const auto specs = candidates(vuln, strategy);
  entry.candidates = specs.size();
  bool have = false;
  for (const auto& spec : specs) {
    const auto attack = build_attack(spec, sys_, nominal_, N);
    const auto layout = decision_layout(attack, N, sys_.controller.Q_yr);
    const auto summary = analyze(sys_, nominal_, law_, attack, layout, epsilon);
    const auto report = algorithm1(summary, layout);
    // strict improvement keeps the first, i.e. lexicographically smallest, maximizer
    if (have && !(report.I1_prime > entry.I1)) continue;
    have = true;
    entry.I1 = report.I1_prime;
    entry.I2 = lower_bound_I2(report);
    entry.feasible = report.feasible;
    entry.unbounded = report.unbounded;
    entry.epsilon_prime = report.epsilon_prime;
    entry.max_kkt_residual = report.max_kkt_residual;
    entry.chosen = spec;
    const bool indexed = report.feasible && !report.unbounded && !report.per_index.empty();
    entry.argmax_index = indexed ? report.argmax_index + 1 : 0;
    entry.argmax_I2_index = indexed ? report.argmax_I2_index + 1 : 0;
    entry.d = indexed ? *report.best_d() : Vector();
  }
  entry.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return entry;
}

std::optional<McValidation> validate_entry(const Assessor& assessor, const AssessmentEntry& entry,
                                           Index N, const SimulationConfig& cfg) {
  if (!entry.feasible || entry.unbounded || entry.d.size() == 0) return std::nullopt;
  const auto attack = build_attack(entry.chosen, assessor.system(), assessor.nominal(), N);
  const auto emp = simulate(assessor.system(), assessor.law(), attack, entry.d, cfg);
  McValidation mc;
  mc.samples = emp.samples;
  mc.E_inf_norm = emp.E_inf_norm;
  mc.inf_norm_se = emp.inf_norm_se;
  mc.jensen_ok = emp.E_inf_norm >= entry.I2 - 3.0 * emp.inf_norm_se;
  mc.exceed_freq = emp.exceed_freq(entry.argmax_index - 1);
  mc.exceed_predicted = entry.I1;
  return mc;
}

AssessmentReport assess(const Scenario& scenario, const AssessOptions& options) {
  const Assessor assessor(scenario);
  const auto vulns = select(scenario.vulnerabilities, options.vulnerabilities, "vulnerability");
  const auto strats = select(scenario.strategies, options.strategies, "strategy");

  AssessmentReport report;
  report.scenario = scenario.name;
  report.horizon = scenario.horizon;
  report.epsilon = scenario.epsilon;
  report.seed = options.seed.value_or(scenario.monte_carlo.seed);
  report.timings = options.timings;
  report.entries.resize(vulns.size() * strats.size());

  parallel_for(report.entries.size(), options.jobs, [&](std::size_t t) {
    const auto& v = *vulns[t / strats.size()];
    const auto& s = *strats[t % strats.size()];
    report.entries[t] = assessor.assess(v, s, scenario.horizon, scenario.epsilon);
  });

  if (options.mc_validate) {
    const auto cfg = mc_config(scenario, options);
    for (auto& e : report.entries) e.mc = validate_entry(assessor, e, scenario.horizon, cfg);
  }
  return report;
}

std::vector<SweepRow> sweep(const Scenario& scenario, const std::string& parameter,
                            const std::vector<double>& values, const AssessOptions& options) {
  if (parameter != "eps" && parameter != "N") {
    throw Error(ErrorKind::SchemaError, "sweep parameter must be eps or N, got " + parameter);
  }
  if (values.empty()) throw Error(ErrorKind::SchemaError, "sweep needs at least one value");
  for (double v : values) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw Error(ErrorKind::SchemaError, "sweep values must be finite and positive");
    }
    if (parameter == "N" && v != std::floor(v)) {
      throw Error(ErrorKind::SchemaError, "N sweep values must be integers");
    }
  }
  const Assessor assessor(scenario);
  const auto vulns = select(scenario.vulnerabilities, options.vulnerabilities, "vulnerability");
  const auto strats = select(scenario.strategies, options.strategies, "strategy");
  const std::size_t pairs = vulns.size() * strats.size();

  std::vector<SweepRow> rows(values.size() * pairs);
  parallel_for(rows.size(), options.jobs, [&](std::size_t t) {
    const double value = values[t / pairs];
    const std::size_t p = t % pairs;
    const auto& v = *vulns[p / strats.size()];
    const auto& s = *strats[p % strats.size()];
    const Index N = parameter == "N" ? static_cast<Index>(value) : scenario.horizon;
    const double eps = parameter == "eps" ? value : scenario.epsilon;
    const auto e = assessor.assess(v, s, N, eps);
    rows[t] = {parameter, value, v.name, s.name, e.I1, e.I2, e.feasible, e.unbounded};
  });

  if (parameter == "eps") {
    // larger epsilon only enlarges the feasible set
    for (std::size_t p = 0; p < pairs; ++p) {
      std::map<double, double> by_eps;
      for (std::size_t k = 0; k < values.size(); ++k) by_eps[values[k]] = rows[k * pairs + p].I1;
      double prev = -1.0;
      for (const auto& [eps, I1] : by_eps) {
        if (I1 < prev - 1e-9) {
          throw Error(ErrorKind::NumericalFailure,
                      "impact decreases with epsilon for " + rows[p].vulnerability + "/" +
                          rows[p].strategy + " at eps=" + std::to_string(eps));
        }
        prev = std::max(prev, I1);
      }
    }
  }
  return rows;
}

}  // namespace cpsimpact::cli
