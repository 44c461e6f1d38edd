#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "cpsimpact/assessment.hpp"
#include "cpsimpact/error.hpp"
#include "cpsimpact/report.hpp"
#include "cpsimpact/scenario.hpp"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace cpsimpact;
using namespace cpsimpact::cli;
using json = nlohmann::json;

namespace {

const std::string kFixture = std::string(CPSIMPACT_SCENARIO_DIR) + "/chemical_process.json";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json fixture_json() { return json::parse(read_file(kFixture)); }

ErrorKind parse_error_kind(const json& doc, std::string* message = nullptr) {
  try {
    (void)parse_scenario(doc.dump());
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "scenario was accepted";
  return ErrorKind::NumericalFailure;
}

const AssessmentEntry& find(const AssessmentReport& r, const std::string& vuln,
                            const std::string& strategy) {
  for (const auto& e : r.entries)
    if (e.vulnerability == vuln && e.strategy == strategy) return e;
  throw std::runtime_error("missing entry " + vuln + "/" + strategy);
}

const AssessmentReport& full_report() {
  static const AssessmentReport report = assess(load_scenario(kFixture), AssessOptions{});
  return report;
}

}  // namespace

TEST(LoadScenario, BundledFixtureMatchesModel) {
  const auto s = load_scenario(kFixture);
  const auto plant = fixtures::chemical_plant();
  const auto ctrl = fixtures::chemical_controller();
  EXPECT_EQ(s.plant.A, plant.A);
  EXPECT_EQ(s.plant.B, plant.B);
  EXPECT_EQ(s.plant.C, plant.C);
  EXPECT_EQ(s.plant.Sigma_v, plant.Sigma_v);
  EXPECT_EQ(s.plant.Sigma_w, plant.Sigma_w);
  EXPECT_LT((s.controller.L_xhat - ctrl.L_xhat).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((s.controller.L_yr - ctrl.L_yr).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(s.controller.Q_yr, ctrl.Q_yr);
  EXPECT_EQ(s.Q_z, fixtures::chemical_Qz());
  EXPECT_EQ(s.horizon, 10);
  EXPECT_EQ(s.epsilon, 0.3);
  ASSERT_EQ(s.vulnerabilities.size(), 2u);
  EXPECT_EQ(s.vulnerabilities[0].resources, fixtures::kVuln1);
  EXPECT_EQ(s.vulnerabilities[1].resources, fixtures::kVuln2);
  EXPECT_EQ(s.strategies.size(), 5u);
  EXPECT_EQ(s.monte_carlo.samples, 100000u);
  const Assessor assessor(s);
  EXPECT_LT(numcore::spectral_radius(assessor.nominal().A_e), 1.0);
}

TEST(LoadScenario, NegativeNoiseVarianceIsSchemaError) {
  auto doc = fixture_json();
  doc["plant"]["Sigma_w"][1][1] = -0.01;
  std::string msg;
  EXPECT_EQ(parse_error_kind(doc, &msg), ErrorKind::SchemaError);
  EXPECT_NE(msg.find("Sigma_w"), std::string::npos) << msg;
}

TEST(LoadScenario, InputCountMismatchIsDimensionError) {
  auto doc = fixture_json();
  for (auto& row : doc["plant"]["B"]) row.push_back(0.0);
  EXPECT_EQ(parse_error_kind(doc), ErrorKind::DimensionError);
}

TEST(LoadScenario, RaggedMatrixIsSchemaError) {
  auto doc = fixture_json();
  doc["plant"]["A"][1].erase(0);
  std::string msg;
  EXPECT_EQ(parse_error_kind(doc, &msg), ErrorKind::SchemaError);
  EXPECT_NE(msg.find("plant.A"), std::string::npos) << msg;
}

TEST(LoadScenario, SyntaxErrorReportsPosition) {
  try {
    (void)parse_scenario("{\n  \"plant\": {\n    \"A\": [[1, 2],\n  }\n}", "broken.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("broken.json"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  }
}

TEST(LoadScenario, SchemaViolationsNameTheField) {
  struct Case {
    std::function<void(json&)> mutate;
    std::string field;
  };
  const std::vector<Case> cases = {
      {[](json& d) { d.erase("horizon"); }, "horizon"},
      {[](json& d) { d["horizon"] = 0; }, "horizon"},
      {[](json& d) { d["epsilon"] = -0.1; }, "epsilon"},
      {[](json& d) { d["strategies"][0]["kind"] = "teleport"; }, "strategies[0]"},
      {[](json& d) { d["vulnerabilities"][0]["sensors"] = json::array({9}); }, "vulnerabilities[0]"},
      {[](json& d) { d["schema_version"] = 99; }, "schema_version"},
      {[](json& d) { d["plant"]["A"][0][0] = "x"; }, "plant.A"},
  };
  for (const auto& c : cases) {
    auto doc = fixture_json();
    c.mutate(doc);
    std::string msg;
    EXPECT_EQ(parse_error_kind(doc, &msg), ErrorKind::SchemaError) << c.field;
    EXPECT_NE(msg.find(c.field), std::string::npos) << msg;
  }
}

TEST(LoadScenario, MissingFileIsIoError) {
  try {
    (void)load_scenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Assess, FixtureGridAndQualitativeFindings) {
  const auto& r = full_report();
  ASSERT_EQ(r.entries.size(), 10u);
  EXPECT_EQ(find(r, "vulnerability_1", "rerouting").I1, 0.0);
  EXPECT_EQ(find(r, "vulnerability_2", "rerouting").I1, 0.0);
  EXPECT_NEAR(find(r, "vulnerability_1", "replay").I1, find(r, "vulnerability_1", "fdi").I1, 1e-3);
  EXPECT_GT(find(r, "vulnerability_2", "dos").I1, find(r, "vulnerability_1", "dos").I1);
  for (const char* v : {"vulnerability_1", "vulnerability_2"}) {
    const double fdi = find(r, v, "fdi").I1;
    for (const char* s : {"dos", "rerouting", "replay", "bias"}) EXPECT_GE(fdi, find(r, v, s).I1) << v << " " << s;
  }
  EXPECT_FALSE(r.all_zero());
}

TEST(Assess, EntriesAreConsistent) {
  for (const auto& e : full_report().entries) {
    EXPECT_GE(e.I1, 0.0);
    EXPECT_LE(e.I1, 1.0);
    if (!e.feasible) {
      EXPECT_EQ(e.I1, 0.0);
      EXPECT_EQ(e.I2, 0.0);
      EXPECT_EQ(e.argmax_index, 0);
    } else if (!e.unbounded) {
      EXPECT_GE(e.argmax_index, 1);
      EXPECT_LE(e.argmax_index, 10);
      EXPECT_LE(e.max_kkt_residual, kKktTolerance);
      EXPECT_GT(e.d.size(), 0);
    }
    EXPECT_GE(e.candidates, 1u);
  }
}

TEST(Assess, SubsetSearchPicksWorstCase) {
  const auto s = load_scenario(kFixture);
  const Assessor assessor(s);
  const auto& dos = s.strategies[0];
  ASSERT_EQ(dos.kind, StrategyKind::DoS);
  const auto entry = assessor.assess(s.vulnerabilities[1], dos, 10, 0.3);
  EXPECT_EQ(entry.candidates, 7u);
  double best = 0.0;
  for (const auto& spec : assessor.candidates(s.vulnerabilities[1], dos)) {
    const auto att = build_attack(spec, assessor.system(), assessor.nominal(), 10);
    const auto layout = decision_layout(att, 10, s.controller.Q_yr);
    const auto sum = analyze(assessor.system(), assessor.nominal(), assessor.law(), att, layout, 0.3);
    best = std::max(best, algorithm1(sum, layout).I1_prime);
  }
  EXPECT_EQ(entry.I1, best);
}

TEST(Assess, FiltersAndUnknownNames) {
  const auto s = load_scenario(kFixture);
  AssessOptions o;
  o.strategies = {"fdi", "bias"};
  o.vulnerabilities = {"vulnerability_2"};
  const auto r = assess(s, o);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].strategy, "fdi");
  EXPECT_EQ(r.entries[1].strategy, "bias");
  o.strategies = {"teleport"};
  try {
    (void)assess(s, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
  }
}

TEST(Assess, JobsAndRepeatsGiveIdenticalBytes) {
  const auto s = load_scenario(kFixture);
  AssessOptions o;
  const std::string a = format_json(assess(s, o));
  const std::string b = format_json(assess(s, o));
  o.jobs = 3;
  const std::string c = format_json(assess(s, o));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Sweep, EpsilonIsNondecreasing) {
  const auto s = load_scenario(kFixture);
  AssessOptions o;
  o.strategies = {"fdi", "bias"};
  o.vulnerabilities = {"vulnerability_2"};
  const std::vector<double> eps = {0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0};
  const auto rows = sweep(s, "eps", eps, o);
  ASSERT_EQ(rows.size(), eps.size() * 2);
  for (const char* strategy : {"fdi", "bias"}) {
    double prev = -1.0;
    for (const auto& row : rows) {
      if (row.strategy != strategy) continue;
      EXPECT_GE(row.I1, prev - 1e-9) << strategy << " at eps " << row.value;
      prev = row.I1;
    }
  }
}

TEST(Sweep, BiasHasDecreasingSegmentInHorizon) {
  const auto s = load_scenario(kFixture);
  AssessOptions o;
  o.strategies = {"bias"};
  o.vulnerabilities = {"vulnerability_2"};
  std::vector<double> N;
  for (int n = 2; n <= 50; n += 4) N.push_back(n);
  const auto rows = sweep(s, "N", N, o);
  ASSERT_EQ(rows.size(), N.size());
  int decreases = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].I1 < rows[k - 1].I1) ++decreases;
  EXPECT_GT(decreases, 0);
}

TEST(Sweep, SingleValueReducesToAssess) {
  const auto s = load_scenario(kFixture);
  AssessOptions o;
  o.strategies = {"dos", "fdi"};
  const auto rows = sweep(s, "eps", {0.3}, o);
  const auto r = assess(s, o);
  ASSERT_EQ(rows.size(), r.entries.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].vulnerability, r.entries[k].vulnerability);
    EXPECT_EQ(rows[k].strategy, r.entries[k].strategy);
    EXPECT_EQ(rows[k].I1, r.entries[k].I1);
    EXPECT_EQ(rows[k].I2, r.entries[k].I2);
  }
}

TEST(Sweep, RejectsBadParameters) {
  const auto s = load_scenario(kFixture);
  EXPECT_THROW((void)sweep(s, "rho", {1.0}, {}), Error);
  EXPECT_THROW((void)sweep(s, "N", {2.5}, {}), Error);
  EXPECT_THROW((void)sweep(s, "eps", {-1.0}, {}), Error);
}

TEST(Report, JsonRoundTripAtTwelveDigits) {
  const auto& r = full_report();
  const auto doc = json::parse(format_json(r));
  EXPECT_EQ(doc["schema_version"], kReportSchemaVersion);
  ASSERT_EQ(doc["entries"].size(), r.entries.size());
  auto twelve = [](double x) { return std::strtod(format_real(x).c_str(), nullptr); };
  for (std::size_t k = 0; k < r.entries.size(); ++k) {
    const auto& e = r.entries[k];
    const auto& j = doc["entries"][k];
    EXPECT_EQ(j["vulnerability"], e.vulnerability);
    EXPECT_EQ(j["strategy"], e.strategy);
    EXPECT_EQ(j["I1"].get<double>(), twelve(e.I1));
    if (std::isinf(e.I2)) {
      EXPECT_TRUE(j["I2"].is_null());
    } else {
      EXPECT_EQ(j["I2"].get<double>(), twelve(e.I2));
    }
    ASSERT_EQ(j["d"].size(), static_cast<std::size_t>(e.d.size()));
    for (Index i = 0; i < e.d.size(); ++i) EXPECT_EQ(j["d"][i].get<double>(), twelve(e.d(i)));
    EXPECT_FALSE(j.contains("seconds"));
  }
  // a second serialization of the parsed values is stable
  EXPECT_EQ(json::parse(doc.dump()), doc);
}

TEST(Report, FieldOrderIsFixed) {
  const auto doc = nlohmann::ordered_json::parse(format_json(full_report()));
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc["entries"][0].items()) keys.push_back(k);
  const std::vector<std::string> expected = {
      "vulnerability", "strategy", "kind", "feasible", "unbounded", "I1", "I2", "argmax_index",
      "argmax_I2_index", "epsilon_prime", "max_kkt_residual", "worst_case", "candidates", "d", "mc"};
  EXPECT_EQ(keys, expected);
}

TEST(Report, CsvOneRowPerPair) {
  const std::string csv = format_csv(full_report());
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0].rfind("vulnerability,strategy,kind", 0), 0u);
  EXPECT_EQ(lines[1].rfind("vulnerability_1,dos,dos,", 0), 0u) << lines[1];
}

TEST(Report, EmitWritesFileAndReportsIoErrors) {
  const auto& r = full_report();
  const auto path = std::filesystem::temp_directory_path() / "cpsimpact_report_test.csv";
  emit_report(r, ReportFormat::Csv, path);
  EXPECT_EQ(read_file(path.string()), format_csv(r));
  std::filesystem::remove(path);
  try {
    emit_report(r, ReportFormat::Json, "/nonexistent/dir/report.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Report, FormatRealUsesTwelveSignificantDigits) {
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_real(0.0), "0");
  EXPECT_EQ(format_real(123456789012345.0), "1.23456789012e+14");
}

TEST(Describe, ChannelLists) {
  StrategySpec s;
  s.resources = fixtures::kVuln1;
  EXPECT_EQ(describe(s), "y2,y3,u3,u4");
  StrategySpec p;
  p.kind = StrategyKind::Rerouting;
  p.sensor_permutation = {1, 3, 2};
  EXPECT_EQ(describe(p), "y:[1,3,2] u:id");
}
