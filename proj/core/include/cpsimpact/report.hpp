#pragma once

// Report serialization. Floats carry 12 significant digits, fields appear in
// a fixed order, and +inf (unbounded I2) is written as null.

#include <filesystem>
#include <string>

#include "cpsimpact/assessment.hpp"

namespace cpsimpact::cli {

enum class ReportFormat { Json, Csv };

[[nodiscard]] std::string format_json(const AssessmentReport& report);

/// One row per entry, or the long-format sweep table when a sweep was run.
[[nodiscard]] std::string format_csv(const AssessmentReport& report);

/// Writes to `path`, or to stdout when path is empty or "-". Throws IoError.
void emit_report(const AssessmentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

/// The %.12g rendering used in reports.
[[nodiscard]] std::string format_real(double x);

}  // namespace cpsimpact::cli
