#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cinetrack/bspline.hpp"
#include "cinetrack/metrics.hpp"
#include "cinetrack/optimizer.hpp"
#include "cinetrack/registration.hpp"
#include "cinetrack/tracker.hpp"

namespace cinetrack {

inline constexpr int kReportSchemaVersion = 1;

/// Fixed column order of the per-frame metrics CSV.
inline const std::vector<std::string> kMetricsCsvColumns = {
    "case_id", "frame", "dsc", "hd", "hd95", "asd", "cd", "ms", "valid"};

enum class ReportFormat { json, csv };

/// Controls wall-clock fields. With include_timing = false every timing value
/// is written as null (JSON) or left blank (CSV) so that repeated runs produce
/// identical bytes.
struct ReportOptions {
  bool include_timing = true;
};

nlohmann::json to_json(const LatencySummary &s);
LatencySummary latency_from_json(const nlohmann::json &j);

nlohmann::json to_json(const MetricsReport &r, const ReportOptions &opt = {});
MetricsReport metrics_report_from_json(const nlohmann::json &j);

/// JSON: {"schema_version": 1, "reports": [...], "summary": {...}} for several
/// cases, or a single report object when given one.
void write_report(const MetricsReport &r, const std::filesystem::path &path,
                  ReportFormat format, const ReportOptions &opt = {});
void write_reports(const std::vector<MetricsReport> &reports, const std::filesystem::path &path,
                   ReportFormat format, const ReportOptions &opt = {});

MetricsReport read_metrics_json(const std::filesystem::path &path);
/// Per-frame rows of a metrics CSV grouped by case in file order; aggregates
/// are recomputed from the rows (latency is not stored in CSV).
std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path &path);

nlohmann::json to_json(const BSplineFFD &t);
BSplineFFD bspline_from_json(const nlohmann::json &j);

nlohmann::json to_json(const RegistrationConfig &c);
RegistrationConfig registration_config_from_json(const nlohmann::json &j);

nlohmann::json to_json(const RegistrationReport &r, const ReportOptions &opt = {});

/// iteration,value,grad_norm,step,ms
void write_trace_csv(const OptimizationTrace &trace, const std::filesystem::path &path);

void write_json(const nlohmann::json &j, const std::filesystem::path &path);
nlohmann::json read_json(const std::filesystem::path &path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

} // namespace cinetrack
