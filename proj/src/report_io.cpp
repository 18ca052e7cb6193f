#include "cinetrack/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace cinetrack {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double v) {
  if (!std::isfinite(v))
    return nullptr;
  return v;
}

double number_or_nan(const json &j) { return j.is_null() ? kNaN : j.get<double>(); }

json timing(double v, const ReportOptions &opt) {
  return opt.include_timing ? number_or_null(v) : json(nullptr);
}

json to_json(const MetricAggregate &a) {
  return {{"mean", number_or_null(a.mean)},
          {"median", number_or_null(a.median)},
          {"worst", number_or_null(a.worst)},
          {"count", a.count}};
}

MetricAggregate aggregate_from_json(const json &j) {
  MetricAggregate a;
  a.mean = number_or_nan(j.at("mean"));
  a.median = number_or_nan(j.at("median"));
  a.worst = number_or_nan(j.at("worst"));
  a.count = j.at("count").get<std::size_t>();
  return a;
}

void require_schema(const json &j) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kReportSchemaVersion)
    throw IoError("report: unsupported or missing schema_version");
}

std::ofstream open_out(const std::filesystem::path &path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("report: cannot write " + path.string());
  return out;
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }

void write_csv_rows(std::ostream &out, const MetricsReport &r, const ReportOptions &opt) {
  for (const auto &f : r.frames) {
    out << r.case_id << ',' << f.frame << ',' << csv_number(f.dsc) << ','
        << csv_number(f.hd_mm) << ',' << csv_number(f.hd95_mm) << ','
        << csv_number(f.asd_mm) << ',' << csv_number(f.cd_mm) << ','
        << (opt.include_timing ? csv_number(f.ms) : "") << ',' << (f.valid ? 1 : 0)
        << '\n';
  }
}

void write_csv_header(std::ostream &out) {
  for (std::size_t i = 0; i < kMetricsCsvColumns.size(); ++i)
    out << (i ? "," : "") << kMetricsCsvColumns[i];
  out << '\n';
}

json cross_case_summary(const std::vector<MetricsReport> &reports) {
  // Mean of per-case means, skipping cases where a metric is undefined.
  auto cross = [&](auto member) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &r : reports) {
      const double v = (r.*member).mean;
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    return number_or_null(n ? sum / static_cast<double>(n) : kNaN);
  };
  return {{"cases", reports.size()},
          {"dsc", cross(&MetricsReport::dsc)},
          {"hd", cross(&MetricsReport::hd)},
          {"hd95", cross(&MetricsReport::hd95)},
          {"asd", cross(&MetricsReport::asd)},
          {"cd", cross(&MetricsReport::cd)}};
}

} // namespace

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

json to_json(const LatencySummary &s) {
  return {{"frames", s.frames},
          {"mean_ms", s.mean_ms},
          {"median_ms", s.median_ms},
          {"p95_ms", s.p95_ms},
          {"max_ms", s.max_ms},
          {"total_ms", s.total_ms},
          {"budget_ms", s.budget_ms ? json(*s.budget_ms) : json(nullptr)},
          {"within_budget", s.within_budget},
          {"effective_rate_hz", number_or_null(s.effective_rate_hz)}};
}

LatencySummary latency_from_json(const json &j) {
  LatencySummary s;
  s.frames = j.at("frames").get<std::size_t>();
  s.mean_ms = j.at("mean_ms").get<double>();
  s.median_ms = j.at("median_ms").get<double>();
  s.p95_ms = j.at("p95_ms").get<double>();
  s.max_ms = j.at("max_ms").get<double>();
  s.total_ms = j.at("total_ms").get<double>();
  if (!j.at("budget_ms").is_null())
    s.budget_ms = j.at("budget_ms").get<double>();
  s.within_budget = j.at("within_budget").get<bool>();
  s.effective_rate_hz = j.at("effective_rate_hz").is_null()
                            ? std::numeric_limits<double>::infinity()
                            : j.at("effective_rate_hz").get<double>();
  return s;
}

json to_json(const MetricsReport &r, const ReportOptions &opt) {
  json frames = json::array();
  for (const auto &f : r.frames)
    frames.push_back({{"frame", f.frame},
                      {"dsc", f.dsc},
                      {"hd_mm", number_or_null(f.hd_mm)},
                      {"hd95_mm", number_or_null(f.hd95_mm)},
                      {"asd_mm", number_or_null(f.asd_mm)},
                      {"cd_mm", number_or_null(f.cd_mm)},
                      {"ms", timing(f.ms, opt)},
                      {"valid", f.valid}});
  json j = {{"schema_version", kReportSchemaVersion},
            {"case_id", r.case_id},
            {"frames", frames},
            {"aggregates",
             {{"dsc", to_json(r.dsc)},
              {"hd", to_json(r.hd)},
              {"hd95", to_json(r.hd95)},
              {"asd", to_json(r.asd)},
              {"cd", to_json(r.cd)}}},
            {"excluded_frames", r.excluded_frames}};
  j["latency"] = opt.include_timing ? to_json(r.latency) : json(nullptr);
  return j;
}

MetricsReport metrics_report_from_json(const json &j) {
  require_schema(j);
  MetricsReport r;
  r.case_id = j.at("case_id").get<std::string>();
  for (const auto &f : j.at("frames")) {
    FrameMetrics fm;
    fm.frame = f.at("frame").get<int>();
    fm.dsc = f.at("dsc").get<double>();
    fm.hd_mm = number_or_nan(f.at("hd_mm"));
    fm.hd95_mm = number_or_nan(f.at("hd95_mm"));
    fm.asd_mm = number_or_nan(f.at("asd_mm"));
    fm.cd_mm = number_or_nan(f.at("cd_mm"));
    fm.ms = f.at("ms").is_null() ? 0.0 : f.at("ms").get<double>();
    fm.valid = f.at("valid").get<bool>();
    r.frames.push_back(fm);
  }
  const auto &a = j.at("aggregates");
  r.dsc = aggregate_from_json(a.at("dsc"));
  r.hd = aggregate_from_json(a.at("hd"));
  r.hd95 = aggregate_from_json(a.at("hd95"));
  r.asd = aggregate_from_json(a.at("asd"));
  r.cd = aggregate_from_json(a.at("cd"));
  r.excluded_frames = j.at("excluded_frames").get<std::size_t>();
  if (!j.at("latency").is_null())
    r.latency = latency_from_json(j.at("latency"));
  return r;
}

void write_json(const json &j, const std::filesystem::path &path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out)
    throw IoError("report: write failed for " + path.string());
}

json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("report: cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw CorruptFileError("report: invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_report(const MetricsReport &r, const std::filesystem::path &path,
                  ReportFormat format, const ReportOptions &opt) {
  if (format == ReportFormat::json) {
    write_json(to_json(r, opt), path);
    return;
  }
  auto out = open_out(path);
  write_csv_header(out);
  write_csv_rows(out, r, opt);
  if (!out)
    throw IoError("report: write failed for " + path.string());
}

void write_reports(const std::vector<MetricsReport> &reports, const std::filesystem::path &path,
                   ReportFormat format, const ReportOptions &opt) {
  if (format == ReportFormat::json) {
    if (reports.size() == 1) {
      write_json(to_json(reports.front(), opt), path);
      return;
    }
    json arr = json::array();
    for (const auto &r : reports)
      arr.push_back(to_json(r, opt));
    write_json({{"schema_version", kReportSchemaVersion},
                {"reports", arr},
                {"summary", cross_case_summary(reports)}},
               path);
    return;
  }
  auto out = open_out(path);
  write_csv_header(out);
  for (const auto &r : reports)
    write_csv_rows(out, r, opt);
  if (!out)
    throw IoError("report: write failed for " + path.string());
}

MetricsReport read_metrics_json(const std::filesystem::path &path) {
  try {
    return metrics_report_from_json(read_json(path));
  } catch (const json::exception &e) {
    throw CorruptFileError("report: malformed metrics JSON in " + path.string() + ": " +
                           e.what());
  }
}

std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("report: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw CorruptFileError("report: empty CSV " + path.string());
  {
    std::ostringstream expected;
    write_csv_header(expected);
    std::string want = expected.str();
    want.pop_back();
    if (line != want)
      throw CorruptFileError("report: unexpected CSV header in " + path.string());
  }
  std::vector<MetricsReport> reports;
  auto parse = [&](const std::string &s) {
    if (s.empty())
      return kNaN;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw CorruptFileError("report: bad number '" + s + "' in " + path.string());
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
      cells.emplace_back();
    if (cells.size() != kMetricsCsvColumns.size())
      throw CorruptFileError("report: wrong column count in " + path.string());
    if (reports.empty() || reports.back().case_id != cells[0]) {
      reports.emplace_back();
      reports.back().case_id = cells[0];
    }
    FrameMetrics fm;
    fm.frame = static_cast<int>(parse(cells[1]));
    fm.dsc = parse(cells[2]);
    fm.hd_mm = parse(cells[3]);
    fm.hd95_mm = parse(cells[4]);
    fm.asd_mm = parse(cells[5]);
    fm.cd_mm = parse(cells[6]);
    fm.ms = cells[7].empty() ? 0.0 : parse(cells[7]);
    fm.valid = cells[8] == "1";
    reports.back().frames.push_back(fm);
  }
  for (auto &r : reports)
    recompute_aggregates(r);
  return reports;
}

json to_json(const BSplineFFD &t) {
  const Eigen::Index n = t.node_count();
  const Eigen::VectorXd &c = t.coefficients();
  return {{"control_spacing", {t.control_spacing().x(), t.control_spacing().y()}},
          {"control_dims", {t.grid_rows(), t.grid_cols()}},
          {"domain",
           {{"min", {t.domain().min.x(), t.domain().min.y()}},
            {"max", {t.domain().max.x(), t.domain().max.y()}}}},
          {"coefficients",
           {{"x", std::vector<double>(c.data(), c.data() + n)},
            {"y", std::vector<double>(c.data() + n, c.data() + 2 * n)}}}};
}

BSplineFFD bspline_from_json(const json &j) {
  try {
    const auto sp = j.at("control_spacing").get<std::vector<double>>();
    const auto dims = j.at("control_dims").get<std::vector<Eigen::Index>>();
    const auto mn = j.at("domain").at("min").get<std::vector<double>>();
    const auto mx = j.at("domain").at("max").get<std::vector<double>>();
    const auto cx = j.at("coefficients").at("x").get<std::vector<double>>();
    const auto cy = j.at("coefficients").at("y").get<std::vector<double>>();
    if (sp.size() != 2 || dims.size() != 2 || mn.size() != 2 || mx.size() != 2 ||
        cx.size() != cy.size())
      throw CorruptFileError("transform: malformed record");
    Eigen::VectorXd c(static_cast<Eigen::Index>(2 * cx.size()));
    for (std::size_t i = 0; i < cx.size(); ++i) {
      c[static_cast<Eigen::Index>(i)] = cx[i];
      c[static_cast<Eigen::Index>(i + cx.size())] = cy[i];
    }
    return BSplineFFD(Rect{Point(mn[0], mn[1]), Point(mx[0], mx[1])},
                      Eigen::Vector2d(sp[0], sp[1]), dims[0], dims[1], std::move(c));
  } catch (const json::exception &e) {
    throw CorruptFileError(std::string("transform: malformed record: ") + e.what());
  }
}

json to_json(const RegistrationConfig &c) {
  return {{"control_spacing_mm", c.control_spacing_mm},
          {"levels", c.levels},
          {"iterations_per_level", c.iterations_per_level},
          {"samples_per_iteration", c.samples_per_iteration},
          {"metric", to_string(c.metric)},
          {"seed", c.seed},
          {"profile", to_string(c.profile)},
          {"bending_weight", c.bending_weight},
          {"step_a", c.step_a ? json(*c.step_a) : json("auto")},
          {"step_A", c.step_A},
          {"step_alpha", c.step_alpha},
          {"gradient_tolerance", c.gradient_tolerance ? json(*c.gradient_tolerance) : json(nullptr)},
          {"mask_threshold", c.mask_threshold}};
}

RegistrationConfig registration_config_from_json(const json &j) {
  RegistrationConfig c;
  c.control_spacing_mm = j.at("control_spacing_mm").get<double>();
  c.levels = j.at("levels").get<int>();
  c.iterations_per_level = j.at("iterations_per_level").get<int>();
  c.samples_per_iteration = j.at("samples_per_iteration").get<int>();
  c.metric = parse_metric(j.at("metric").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.profile = parse_profile(j.at("profile").get<std::string>());
  c.bending_weight = j.at("bending_weight").get<double>();
  if (j.at("step_a").is_number())
    c.step_a = j.at("step_a").get<double>();
  c.step_A = j.at("step_A").get<double>();
  c.step_alpha = j.at("step_alpha").get<double>();
  if (!j.at("gradient_tolerance").is_null())
    c.gradient_tolerance = j.at("gradient_tolerance").get<double>();
  c.mask_threshold = j.at("mask_threshold").get<double>();
  return c;
}

json to_json(const RegistrationReport &r, const ReportOptions &opt) {
  json levels = json::array();
  for (const auto &l : r.levels) {
    json trace = json::array();
    for (const auto &rec : l.trace.records)
      trace.push_back({{"iteration", rec.iteration},
                       {"value", rec.value},
                       {"grad_norm", rec.grad_norm},
                       {"step", rec.step},
                       {"ms", timing(rec.ms, opt)}});
    levels.push_back({{"level", l.level},
                      {"image_dims", {l.fixed_geometry.rows, l.fixed_geometry.cols}},
                      {"control_spacing", {l.control_spacing.x(), l.control_spacing.y()}},
                      {"control_dims", {l.grid_rows, l.grid_cols}},
                      {"step_a", l.trace.step_a},
                      {"iterations", l.trace.records.size()},
                      {"ms", timing(l.ms, opt)},
                      {"trace", trace}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"levels", levels},
          {"setup_ms", timing(r.setup_ms, opt)},
          {"evaluation_ms", timing(r.evaluation_ms, opt)},
          {"total_ms", timing(r.total_ms, opt)},
          {"initial_value", number_or_null(r.initial_value)},
          {"final_value", number_or_null(r.final_value)},
          {"failed", r.failed},
          {"message", r.message}};
}

void write_trace_csv(const OptimizationTrace &trace, const std::filesystem::path &path) {
  auto out = open_out(path);
  out << "iteration,value,grad_norm,step,ms\n";
  for (const auto &r : trace.records)
    out << r.iteration << ',' << format_double(r.value) << ',' << format_double(r.grad_norm)
        << ',' << format_double(r.step) << ',' << format_double(r.ms) << '\n';
  if (!out)
    throw IoError("report: write failed for " + path.string());
}

} // namespace cinetrack
