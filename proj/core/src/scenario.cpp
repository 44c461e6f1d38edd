#include "cpsimpact/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cpsimpact/error.hpp"
#include "json.hpp"

namespace cpsimpact::cli {
namespace {

using nlohmann::json;

[[noreturn]] void schema(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::SchemaError, field + ": " + msg);
}

[[noreturn]] void dimension(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::DimensionError, field + ": " + msg);
}

std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

const json& member(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema(path + key, "missing");
  return *it;
}

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) schema(field, "expected a non-empty array of rows");
  // a flat array is read as a single row
  if (!j.front().is_array()) {
    Matrix m(1, static_cast<Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) {
      if (!j[c].is_number()) schema(field, "entry " + std::to_string(c) + " is not a number");
      m(0, static_cast<Index>(c)) = j[c].get<double>();
    }
    return m;
  }
  const std::size_t cols = j.front().size();
  if (cols == 0) schema(field, "rows must be non-empty");
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      schema(field, "row " + std::to_string(r) + " does not have " + std::to_string(cols) +
                        " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        schema(field, "entry (" + std::to_string(r) + "," + std::to_string(c) + ") is not a number");
      }
      m(static_cast<Index>(r), static_cast<Index>(c)) = row[c].get<double>();
    }
  }
  if (!m.allFinite()) schema(field, "entries must be finite");
  return m;
}

void expect_shape(const Matrix& m, Index rows, Index cols, const std::string& field) {
  if (m.rows() != rows || m.cols() != cols) {
    dimension(field, "is " + shape(m.rows(), m.cols()) + ", expected " + shape(rows, cols));
  }
}

std::vector<int> parse_indices(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_array()) schema(path + key, "expected an array of 1-based channel indices");
  std::vector<int> out;
  for (const auto& v : *it) {
    if (!v.is_number_integer()) schema(path + key, "indices must be integers");
    out.push_back(v.get<int>());
  }
  return out;
}

ResourceSet parse_resources(const json& obj, const std::string& path, Index n_y, Index n_u) {
  if (!obj.is_object()) schema(path, "expected an object with sensors/actuators");
  ResourceSet res{parse_indices(obj, "sensors", path + "."), parse_indices(obj, "actuators", path + ".")};
  try {
    res.validate(n_y, n_u);
  } catch (const Error& e) {
    schema(path, e.what());
  }
  return res;
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

StrategyKind parse_kind(const json& s, const std::string& path) {
  const auto name = member(s, "kind", path).get<std::string>();
  if (name == "replay") {
    // actuator side defaults to denial of service
    const auto it = s.find("actuator_mode");
    const std::string mode = it == s.end() ? "dos" : it->get<std::string>();
    if (mode == "dos") return StrategyKind::ReplayDos;
    if (mode == "bias") return StrategyKind::ReplayBias;
    schema(path + "actuator_mode", "expected \"dos\" or \"bias\", got \"" + mode + "\"");
  }
  const auto kind = parse_strategy_kind(name);
  if (!kind) schema(path + "kind", "unknown strategy kind \"" + name + "\"");
  return *kind;
}

void validate_models(const Scenario& sc) {
  const auto& p = sc.plant;
  if (!numcore::check_spd(p.Sigma_v).is_positive_definite) {
    schema("plant.Sigma_v", "not positive definite");
  }
  if (!numcore::check_spd(p.Sigma_w).is_positive_definite) {
    schema("plant.Sigma_w", "not positive definite");
  }
  try {
    p.validate();
  } catch (const Error& e) {
    schema("plant", e.what());
  }
  try {
    sc.controller.validate(p);
  } catch (const Error& e) {
    schema("controller", e.what());
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + position(text, e.byte) + ": " + e.what());
  }
  try {
    if (!root.is_object()) schema("<root>", "expected an object");
    Scenario sc;
    const auto& version = member(root, "schema_version", "");
    if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion) {
      schema("schema_version", "expected " + std::to_string(kScenarioSchemaVersion));
    }
    if (const auto it = root.find("name"); it != root.end()) sc.name = it->get<std::string>();

    const auto& plant = member(root, "plant", "");
    sc.plant.A = parse_matrix(member(plant, "A", "plant."), "plant.A");
    sc.plant.B = parse_matrix(member(plant, "B", "plant."), "plant.B");
    sc.plant.C = parse_matrix(member(plant, "C", "plant."), "plant.C");
    sc.plant.Sigma_v = parse_matrix(member(plant, "Sigma_v", "plant."), "plant.Sigma_v");
    sc.plant.Sigma_w = parse_matrix(member(plant, "Sigma_w", "plant."), "plant.Sigma_w");
    const Index nx = sc.plant.A.rows();
    expect_shape(sc.plant.A, nx, nx, "plant.A");
    const Index nu = sc.plant.B.cols(), ny = sc.plant.C.rows();
    expect_shape(sc.plant.B, nx, nu, "plant.B");
    expect_shape(sc.plant.C, ny, nx, "plant.C");
    expect_shape(sc.plant.Sigma_v, nx, nx, "plant.Sigma_v");
    expect_shape(sc.plant.Sigma_w, ny, ny, "plant.Sigma_w");

    const auto& ctrl = member(root, "controller", "");
    sc.controller.L_xhat = parse_matrix(member(ctrl, "L_xhat", "controller."), "controller.L_xhat");
    sc.controller.L_yr = parse_matrix(member(ctrl, "L_yr", "controller."), "controller.L_yr");
    sc.controller.Q_yr = parse_matrix(member(ctrl, "Q_yr", "controller."), "controller.Q_yr");
    const Index nyr = sc.controller.L_yr.cols();
    expect_shape(sc.controller.L_xhat, nu, nx, "controller.L_xhat");
    expect_shape(sc.controller.L_yr, nu, nyr, "controller.L_yr");
    expect_shape(sc.controller.Q_yr, nyr, nyr, "controller.Q_yr");

    sc.Q_z = parse_matrix(member(root, "Q_z", ""), "Q_z");
    if (sc.Q_z.cols() != nx && sc.Q_z.cols() != 2 * nx) {
      dimension("Q_z", "has " + std::to_string(sc.Q_z.cols()) + " columns, expected " +
                           std::to_string(nx) + " or " + std::to_string(2 * nx));
    }

    const auto& horizon = member(root, "horizon", "");
    if (!horizon.is_number_integer() || horizon.get<long long>() < 1) {
      schema("horizon", "expected an integer >= 1");
    }
    sc.horizon = horizon.get<Index>();
    const auto& eps = member(root, "epsilon", "");
    if (!eps.is_number() || !(eps.get<double>() >= 0.0)) schema("epsilon", "expected a number >= 0");
    sc.epsilon = eps.get<double>();

    validate_models(sc);

    const auto& vulns = member(root, "vulnerabilities", "");
    if (!vulns.is_array() || vulns.empty()) schema("vulnerabilities", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < vulns.size(); ++i) {
      const std::string path = "vulnerabilities[" + std::to_string(i) + "]";
      Vulnerability v;
      v.name = member(vulns[i], "name", path + ".").get<std::string>();
      if (!names.insert(v.name).second) schema(path + ".name", "duplicate name \"" + v.name + "\"");
      v.resources = parse_resources(vulns[i], path, ny, nu);
      if (v.resources.empty()) schema(path, "no compromised channels");
      sc.vulnerabilities.push_back(std::move(v));
    }

    const auto& strats = member(root, "strategies", "");
    if (!strats.is_array() || strats.empty()) schema("strategies", "expected a non-empty array");
    names.clear();
    for (std::size_t i = 0; i < strats.size(); ++i) {
      const std::string path = "strategies[" + std::to_string(i) + "].";
      StrategyTemplate s;
      s.name = member(strats[i], "name", path).get<std::string>();
      if (!names.insert(s.name).second) schema(path + "name", "duplicate name \"" + s.name + "\"");
      s.kind = parse_kind(strats[i], path);
      if (s.kind == StrategyKind::FdiPlusDos) {
        s.denial = parse_resources(member(strats[i], "deny", path), path + "deny", ny, nu);
      }
      sc.strategies.push_back(std::move(s));
    }

    if (const auto it = root.find("monte_carlo"); it != root.end()) {
      if (const auto s = it->find("samples"); s != it->end()) {
        if (!s->is_number_integer() || s->get<long long>() < 1) {
          schema("monte_carlo.samples", "expected an integer >= 1");
        }
        sc.monte_carlo.samples = s->get<std::size_t>();
      }
      if (const auto s = it->find("seed"); s != it->end()) {
        if (!s->is_number_integer() || s->get<long long>() < 0) {
          schema("monte_carlo.seed", "expected a non-negative integer");
        }
        sc.monte_carlo.seed = s->get<std::uint64_t>();
      }
    }
    return sc;
  } catch (const json::exception& e) {
    // type errors from get<>() on mistyped fields
    throw Error(ErrorKind::SchemaError, origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace cpsimpact::cli
