#include "cpsimpact/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cpsimpact/error.hpp"
#include "json.hpp"

namespace cpsimpact::cli {
namespace {

using ojson = nlohmann::ordered_json;

ojson real(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::strtod(format_real(x).c_str(), nullptr);
}

std::string csv_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_real(x);
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ojson entry_json(const AssessmentEntry& e, bool timings) {
  ojson j;
  j["vulnerability"] = e.vulnerability;
  j["strategy"] = e.strategy;
  j["kind"] = std::string(to_string(e.kind));
  j["feasible"] = e.feasible;
  j["unbounded"] = e.unbounded;
  j["I1"] = real(e.I1);
  j["I2"] = real(e.I2);
  j["argmax_index"] = e.argmax_index;
  j["argmax_I2_index"] = e.argmax_I2_index;
  j["epsilon_prime"] = real(e.epsilon_prime);
  j["max_kkt_residual"] = real(e.max_kkt_residual);
  j["worst_case"] = describe(e.chosen);
  j["candidates"] = e.candidates;
  ojson d = ojson::array();
  for (Index i = 0; i < e.d.size(); ++i) d.push_back(real(e.d(i)));
  j["d"] = std::move(d);
  if (e.mc) {
    ojson mc;
    mc["samples"] = e.mc->samples;
    mc["E_inf_norm"] = real(e.mc->E_inf_norm);
    mc["inf_norm_se"] = real(e.mc->inf_norm_se);
    mc["jensen_ok"] = e.mc->jensen_ok;
    mc["exceed_freq"] = real(e.mc->exceed_freq);
    mc["exceed_predicted"] = real(e.mc->exceed_predicted);
    j["mc"] = std::move(mc);
  } else {
    j["mc"] = nullptr;
  }
  if (timings) j["seconds"] = real(e.seconds);
  return j;
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string format_json(const AssessmentReport& report) {
  ojson root;
  root["schema_version"] = kReportSchemaVersion;
  root["scenario"] = report.scenario;
  root["horizon"] = report.horizon;
  root["epsilon"] = real(report.epsilon);
  root["seed"] = report.seed;
  ojson entries = ojson::array();
  for (const auto& e : report.entries) entries.push_back(entry_json(e, report.timings));
  root["entries"] = std::move(entries);
  if (!report.sweep_parameter.empty()) {
    ojson rows = ojson::array();
    for (const auto& r : report.sweep) {
      ojson row;
      row["value"] = real(r.value);
      row["vulnerability"] = r.vulnerability;
      row["strategy"] = r.strategy;
      row["I1"] = real(r.I1);
      row["I2"] = real(r.I2);
      row["feasible"] = r.feasible;
      row["unbounded"] = r.unbounded;
      rows.push_back(std::move(row));
    }
    root["sweep"] = {{"parameter", report.sweep_parameter}, {"rows", std::move(rows)}};
  }
  return root.dump(2) + "\n";
}

std::string format_csv(const AssessmentReport& report) {
  std::ostringstream out;
  if (!report.sweep_parameter.empty()) {
    out << "parameter,value,vulnerability,strategy,I1,I2,feasible,unbounded\n";
    for (const auto& r : report.sweep) {
      out << r.parameter << ',' << csv_real(r.value) << ',' << quoted(r.vulnerability) << ','
          << quoted(r.strategy) << ',' << csv_real(r.I1) << ',' << csv_real(r.I2) << ','
          << r.feasible << ',' << r.unbounded << '\n';
    }
    return out.str();
  }
  out << "vulnerability,strategy,kind,feasible,unbounded,I1,I2,argmax_index,argmax_I2_index,"
         "epsilon_prime,worst_case,candidates,mc_samples,mc_E_inf_norm,mc_inf_norm_se,"
         "mc_jensen_ok,mc_exceed_freq";
  if (report.timings) out << ",seconds";
  out << '\n';
  for (const auto& e : report.entries) {
    out << quoted(e.vulnerability) << ',' << quoted(e.strategy) << ',' << to_string(e.kind) << ','
        << e.feasible << ',' << e.unbounded << ',' << csv_real(e.I1) << ',' << csv_real(e.I2)
        << ',' << e.argmax_index << ',' << e.argmax_I2_index << ',' << csv_real(e.epsilon_prime)
        << ',' << quoted(describe(e.chosen)) << ',' << e.candidates << ',';
    if (e.mc) {
      out << e.mc->samples << ',' << csv_real(e.mc->E_inf_norm) << ','
          << csv_real(e.mc->inf_norm_se) << ',' << e.mc->jensen_ok << ','
          << csv_real(e.mc->exceed_freq);
    } else {
      out << ",,,,";
    }
    if (report.timings) out << ',' << csv_real(e.seconds);
    out << '\n';
  }
  return out.str();
}

void emit_report(const AssessmentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  const std::string text = format == ReportFormat::Json ? format_json(report) : format_csv(report);
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw Error(ErrorKind::IoError, "failed to write report to stdout");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace cpsimpact::cli
