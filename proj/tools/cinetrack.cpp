// cinetrack command-line front end: synth, track, eval, bench.
//
// Exit codes: 0 success, 2 input or configuration error, 3 budget exceeded
// (outputs are complete), 4 internal failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cinetrack/case_io.hpp"
#include "cinetrack/metrics.hpp"
#include "cinetrack/report_io.hpp"
#include "cinetrack/synth.hpp"
#include "cinetrack/tracker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cinetrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;
constexpr int kExitInternal = 4;

constexpr const char *kOutputEnv = "CINETRACK_OUTPUT_DIR";

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out;
};

struct SynthOptions {
  Eigen::Index rows = 256;
  Eigen::Index cols = 256;
  double spacing = 1.0;
  int frames = 40;
  double amplitude = 8.0;
  double period = 16.0;
  double noise = 0.02;
  double frame_rate = 4.0;
  std::string case_id = "synth";
  bool deform = false;
};

// Registration settings as given on the command line; unset fields keep the
// profile defaults.
struct RegistrationOptions {
  std::string profile = "quality";
  std::string metric = "msd";
  std::optional<double> control_spacing;
  std::optional<int> levels;
  std::optional<int> iterations;
  std::optional<int> samples;
  std::optional<double> bending_weight;
  std::optional<double> step_a;
  std::optional<double> mask_threshold;

  RegistrationConfig resolve(Profile p, std::uint64_t seed) const {
    RegistrationConfig c = RegistrationConfig::for_profile(p);
    c.metric = parse_metric(metric);
    c.seed = seed;
    if (control_spacing)
      c.control_spacing_mm = *control_spacing;
    if (levels)
      c.levels = *levels;
    if (iterations)
      c.iterations_per_level = *iterations;
    if (samples)
      c.samples_per_iteration = *samples;
    if (bending_weight)
      c.bending_weight = *bending_weight;
    if (step_a)
      c.step_a = *step_a;
    if (mask_threshold)
      c.mask_threshold = *mask_threshold;
    c.validate();
    return c;
  }
};

struct TrackCliOptions {
  std::string case_dir;
  std::string strategy = "register_to_first";
  std::optional<double> budget_ms;
  int workers = 1;
  bool save_transforms = false;
};

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::optional<double> budget_ms;
};

struct BenchOptions {
  std::string case_dir;
  std::vector<std::string> strategies = {"static", "register_to_first"};
  std::vector<std::string> profiles = {"quality"};
  std::optional<double> budget_ms;
  int workers = 1;
};

void add_registration_flags(CLI::App *cmd, RegistrationOptions &r) {
  cmd->add_option("--metric", r.metric, "msd, ncc or feature_msd")->capture_default_str();
  cmd->add_option("--control-spacing", r.control_spacing, "finest control-point spacing in mm");
  cmd->add_option("--levels", r.levels, "pyramid levels");
  cmd->add_option("--iterations", r.iterations, "iterations per level");
  cmd->add_option("--samples", r.samples, "samples per iteration");
  cmd->add_option("--bending-weight", r.bending_weight, "bending penalty weight");
  cmd->add_option("--step-a", r.step_a, "gain numerator (default: calibrated)");
  cmd->add_option("--mask-threshold", r.mask_threshold, "warped mask threshold");
}

fs::path output_dir(const GlobalOptions &g, const std::string &default_name) {
  if (!g.out.empty())
    return g.out;
  if (const char *env = std::getenv(kOutputEnv); env && *env)
    return fs::path(env) / default_name;
  return default_name;
}

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

json global_json(const GlobalOptions &g, const std::string &command, const fs::path &out) {
  return {{"command", command},
          {"seed", g.seed},
          {"deterministic", g.deterministic},
          {"output", out.string()}};
}

void print_config(const json &j) { std::cout << "config " << j.dump(2) << "\n"; }

std::string fixed(double v, int digits) {
  if (std::isnan(v))
    return "nan";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void print_latency(const LatencySummary &s) {
  std::cout << "latency frames=" << s.frames << " mean_ms=" << fixed(s.mean_ms, 2)
            << " p95_ms=" << fixed(s.p95_ms, 2) << " max_ms=" << fixed(s.max_ms, 2)
            << " total_ms=" << fixed(s.total_ms, 1)
            << " rate_hz=" << fixed(s.effective_rate_hz, 1);
  if (s.budget_ms)
    std::cout << " budget_ms=" << fixed(*s.budget_ms, 1)
              << (s.within_budget ? " within_budget" : " OVER_BUDGET");
  std::cout << "\n";
}

// synth

int cmd_synth(const GlobalOptions &g, const SynthOptions &o) {
  PhantomSpec spec;
  spec.rows = o.rows;
  spec.cols = o.cols;
  spec.spacing_mm = o.spacing;
  spec.n_frames = o.frames;
  spec.motion.amplitude_mm = o.amplitude;
  spec.motion.period_frames = o.period;
  if (o.deform)
    spec.motion.deformation_seed = g.seed;
  spec.noise_sigma = o.noise;
  spec.frame_rate_hz = o.frame_rate;
  spec.seed = g.seed;
  spec.case_id = o.case_id;
  spec.tumor.center = Point(0.5 * static_cast<double>(o.cols - 1) * o.spacing,
                            0.5 * static_cast<double>(o.rows - 1) * o.spacing);

  const fs::path out = output_dir(g, o.case_id);
  json cfg = global_json(g, "synth", out);
  cfg["phantom"] = {{"rows", spec.rows},
                    {"cols", spec.cols},
                    {"spacing_mm", spec.spacing_mm},
                    {"frames", spec.n_frames},
                    {"amplitude_mm", spec.motion.amplitude_mm},
                    {"period_frames", spec.motion.period_frames},
                    {"deformation", o.deform},
                    {"noise_sigma", spec.noise_sigma},
                    {"frame_rate_hz", spec.frame_rate_hz},
                    {"tumor_center_mm", {spec.tumor.center.x(), spec.tumor.center.y()}},
                    {"case_id", spec.case_id}};
  print_config(cfg);

  const Phantom ph = generate(spec); // validates before anything is written
  write_case(out, CaseData{ph.sequence, ph.gt_masks, std::nullopt});
  std::cout << "case " << spec.case_id << ": " << spec.n_frames << " frames of " << spec.rows
            << "x" << spec.cols << " at " << spec.frame_rate_hz << " Hz, tumour area "
            << ph.sequence.first_mask.count() << " px, written to " << out.string() << "\n";
  return kExitOk;
}

// track

int cmd_track(const GlobalOptions &g, const TrackCliOptions &o, const RegistrationOptions &ro) {
  const Strategy strategy = parse_strategy(o.strategy);
  const RegistrationConfig reg = ro.resolve(parse_profile(ro.profile), g.seed);
  if (o.budget_ms && !(*o.budget_ms > 0.0))
    throw ConfigurationError("--budget-ms must be > 0");
  if (o.workers < 1)
    throw ConfigurationError("--workers must be >= 1");

  const CaseData data = read_case(o.case_dir);
  const std::string name = data.sequence.case_id + "_" + to_string(strategy) +
                           (strategy == Strategy::static_mask ? "" : "_" + ro.profile);
  const fs::path out = output_dir(g, name);

  json cfg = global_json(g, "track", out);
  cfg["case"] = o.case_dir;
  cfg["strategy"] = to_string(strategy);
  cfg["registration"] = strategy == Strategy::static_mask ? json(nullptr) : to_json(reg);
  cfg["budget_ms"] = optional_json(o.budget_ms);
  cfg["workers"] = o.workers;
  cfg["save_transforms"] = o.save_transforms;
  print_config(cfg);

  TrackOptions topt;
  topt.budget_ms_per_sequence = o.budget_ms;
  topt.workers = o.workers;
  const TrackingResult r = track(data.sequence, strategy, reg, topt);

  const ReportOptions ropt{!g.deterministic};
  const ResultMeta meta{data.sequence.case_id,
                        strategy == Strategy::static_mask ? std::nullopt
                                                          : std::optional<RegistrationConfig>(reg)};
  write_tracking_result(out, r, meta, ropt);
  if (o.save_transforms) {
    fs::create_directories(out / "transforms");
    for (std::size_t t = 0; t < r.transforms.size(); ++t) {
      if (!r.transforms[t])
        continue;
      char file[32];
      std::snprintf(file, sizeof file, "frame_%04zu.json", t);
      write_json({{"frame", t},
                  {"transform", to_json(*r.transforms[t])},
                  {"registration", to_json(*r.reports[t], ropt)}},
                 out / "transforms" / file);
    }
  }

  const LatencySummary lat = latency_report(r, o.budget_ms);
  std::cout << "tracked " << r.masks.size() << " frames of " << data.sequence.case_id << " with "
            << to_string(strategy) << ", results in " << out.string() << "\n";
  for (std::size_t i = 0; i < r.fallback_frames.size(); ++i)
    std::cerr << "warning: frame " << r.fallback_frames[i]
              << " kept the previous mask: " << r.fallback_messages[i] << "\n";
  print_latency(lat);
  if (!r.budget_violations.empty())
    std::cout << "frames over the per-frame budget: " << r.budget_violations.size() << "\n";
  if (!lat.within_budget) {
    std::cerr << "warning: sequence time " << fixed(lat.total_ms, 1) << " ms exceeds the budget of "
              << fixed(*o.budget_ms, 1) << " ms\n";
    return kExitBudget;
  }
  return kExitOk;
}

// eval

std::vector<Mask2D> reference_masks(const fs::path &dir) {
  if (is_case_dir(dir))
    return read_gt_masks(dir);
  if (is_result_dir(dir))
    return read_tracking_result(dir).result.masks;
  throw InputError("eval: " + dir.string() + " is neither a case nor a result directory");
}

MetricsReport evaluate_one(const fs::path &pred, const fs::path &gt,
                           const std::optional<double> &budget) {
  const StoredResult stored = read_tracking_result(pred);
  const auto ref = reference_masks(gt);
  MetricsReport rep =
      evaluate_sequence(stored.result, ref, budget ? budget : stored.result.budget_ms);
  rep.case_id = stored.meta.case_id;
  return rep;
}

void print_report_line(const MetricsReport &r) {
  std::cout << r.case_id << ": DSC " << fixed(r.dsc.mean, 4) << " HD " << fixed(r.hd.mean, 3)
            << " HD95 " << fixed(r.hd95.mean, 3) << " ASD " << fixed(r.asd.mean, 3) << " CD "
            << fixed(r.cd.mean, 3) << " mm over " << r.frames.size() << " frames";
  if (r.excluded_frames)
    std::cout << " (" << r.excluded_frames << " without distances)";
  std::cout << "\n";
}

int cmd_eval(const GlobalOptions &g, const EvalOptions &o) {
  const fs::path pred = o.pred, gt = o.gt;
  const fs::path out = output_dir(g, "eval");
  json cfg = global_json(g, "eval", out);
  cfg["pred"] = o.pred;
  cfg["gt"] = o.gt;
  cfg["budget_ms"] = optional_json(o.budget_ms);
  print_config(cfg);

  if (!fs::is_directory(pred))
    throw InputError("eval: prediction directory " + pred.string() + " not found");
  if (!fs::is_directory(gt))
    throw InputError("eval: ground-truth directory " + gt.string() + " not found");

  std::vector<MetricsReport> reports;
  if (is_result_dir(pred)) {
    reports.push_back(evaluate_one(pred, gt, o.budget_ms));
  } else {
    std::vector<fs::path> cases;
    for (const auto &e : fs::directory_iterator(pred))
      if (e.is_directory() && is_result_dir(e.path()))
        cases.push_back(e.path());
    std::sort(cases.begin(), cases.end());
    if (cases.empty())
      throw InputError("eval: no result directories under " + pred.string());
    for (const auto &c : cases) {
      const fs::path ref = gt / c.filename();
      if (!fs::is_directory(ref))
        throw InputError("eval: no ground truth for " + c.filename().string());
      reports.push_back(evaluate_one(c, ref, o.budget_ms));
    }
  }

  const ReportOptions ropt{!g.deterministic};
  fs::create_directories(out);
  write_reports(reports, out / "metrics.json", ReportFormat::json, ropt);
  write_reports(reports, out / "metrics.csv", ReportFormat::csv, ropt);
  for (const auto &r : reports)
    print_report_line(r);
  if (reports.size() > 1) {
    // mean of the per-case means
    MetricsReport summary;
    summary.case_id = "mean of " + std::to_string(reports.size()) + " cases";
    auto mean_of = [&](auto field) {
      std::vector<double> v;
      for (const auto &r : reports)
        if (!std::isnan((r.*field).mean))
          v.push_back((r.*field).mean);
      return aggregate(v, true).mean;
    };
    summary.dsc.mean = mean_of(&MetricsReport::dsc);
    summary.hd.mean = mean_of(&MetricsReport::hd);
    summary.hd95.mean = mean_of(&MetricsReport::hd95);
    summary.asd.mean = mean_of(&MetricsReport::asd);
    summary.cd.mean = mean_of(&MetricsReport::cd);
    print_report_line(summary);
  }
  std::cout << "reports written to " << (out / "metrics.json").string() << " and "
            << (out / "metrics.csv").string() << "\n";
  return kExitOk;
}

// bench

struct BenchRow {
  std::string method;
  Strategy strategy;
  std::optional<RegistrationConfig> config;
  MetricsReport report;
};

std::string csv_number(double v) { return std::isnan(v) ? "" : format_double(v); }

int cmd_bench(const GlobalOptions &g, const BenchOptions &o, const RegistrationOptions &ro) {
  if (o.budget_ms && !(*o.budget_ms > 0.0))
    throw ConfigurationError("--budget-ms must be > 0");
  if (o.workers < 1)
    throw ConfigurationError("--workers must be >= 1");
  std::vector<Strategy> strategies;
  for (const auto &s : o.strategies)
    strategies.push_back(parse_strategy(s));
  std::vector<Profile> profiles;
  for (const auto &p : o.profiles)
    profiles.push_back(parse_profile(p));
  if (strategies.empty() || profiles.empty())
    throw ConfigurationError("bench: at least one strategy and one profile required");

  const CaseData data = read_case(o.case_dir);
  if (!data.gt_masks)
    throw InputError("bench: case " + o.case_dir + " has no ground-truth masks");
  const fs::path out = output_dir(g, data.sequence.case_id + "_bench");

  std::vector<BenchRow> rows;
  for (Strategy s : strategies) {
    if (s == Strategy::static_mask) {
      rows.push_back({"static", s, std::nullopt, {}});
      continue;
    }
    for (Profile p : profiles)
      rows.push_back({to_string(s) + "/" + to_string(p), s, ro.resolve(p, g.seed), {}});
  }

  json cfg = global_json(g, "bench", out);
  cfg["case"] = o.case_dir;
  cfg["budget_ms"] = optional_json(o.budget_ms);
  cfg["workers"] = o.workers;
  cfg["rows"] = json::array();
  for (const auto &r : rows)
    cfg["rows"].push_back(
        {{"method", r.method}, {"registration", r.config ? to_json(*r.config) : json(nullptr)}});
  print_config(cfg);

  TrackOptions topt;
  topt.budget_ms_per_sequence = o.budget_ms;
  topt.workers = o.workers;
  bool over_budget = false;
  for (auto &row : rows) {
    const RegistrationConfig reg = row.config ? *row.config : RegistrationConfig::quality();
    const TrackingResult r = track(data.sequence, row.strategy, reg, topt);
    row.report = evaluate_sequence(r, *data.gt_masks, o.budget_ms);
    row.report.case_id = data.sequence.case_id;
    over_budget = over_budget || !row.report.latency.within_budget;
  }

  const bool timing = !g.deterministic;
  const std::vector<std::string> header = {"method", "DSC", "HD", "ASD", "CD", "total_ms"};
  std::vector<std::vector<std::string>> cells;
  std::ostringstream csv;
  csv << "method,DSC,HD,ASD,CD,total_ms\n";
  json rows_json = json::array(), timing_json = json::array();
  for (const auto &row : rows) {
    const auto &m = row.report;
    cells.push_back({row.method, fixed(m.dsc.mean, 4), fixed(m.hd.mean, 3), fixed(m.asd.mean, 3),
                     fixed(m.cd.mean, 3), timing ? fixed(m.latency.total_ms, 1) : "-"});
    csv << row.method << "," << csv_number(m.dsc.mean) << "," << csv_number(m.hd.mean) << ","
        << csv_number(m.asd.mean) << "," << csv_number(m.cd.mean) << ","
        << (timing ? format_double(m.latency.total_ms) : "") << "\n";
    json metrics = to_json(m, ReportOptions{timing});
    metrics.erase("frames");
    rows_json.push_back({{"method", row.method},
                         {"strategy", to_string(row.strategy)},
                         {"registration", row.config ? to_json(*row.config) : json(nullptr)},
                         {"report", metrics}});
    timing_json.push_back({{"method", row.method}, {"latency", to_json(m.latency)}});
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto &r : cells)
      width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream text;
  auto line = [&](const std::vector<std::string> &r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0)
        text << std::left << std::setw(static_cast<int>(width[c])) << r[c];
      else
        text << "  " << std::right << std::setw(static_cast<int>(width[c])) << r[c];
    }
    text << "\n";
  };
  line(header);
  for (const auto &r : cells)
    line(r);

  fs::create_directories(out);
  {
    std::ofstream f(out / "bench.csv", std::ios::binary);
    f << csv.str();
    std::ofstream t(out / "bench.txt", std::ios::binary);
    t << text.str();
    if (!f || !t)
      throw IoError("bench: cannot write to " + out.string());
  }
  write_json({{"schema_version", kReportSchemaVersion},
              {"case_id", data.sequence.case_id},
              {"frame_count", data.sequence.frames.size()},
              {"budget_ms", optional_json(o.budget_ms)},
              {"rows", rows_json}},
             out / "bench.json");
  if (!timing)
    write_json({{"rows", timing_json}}, out / kTimingFile);

  std::cout << text.str();
  std::cout << "bench results written to " << out.string() << "\n";
  if (over_budget) {
    std::cerr << "warning: at least one method exceeded the budget of " << fixed(*o.budget_ms, 1)
              << " ms\n";
    return kExitBudget;
  }
  return kExitOk;
}

int run(int argc, char **argv) {
  CLI::App app{"Real-time tumour tracking in 2D cine MRI by B-spline mask propagation"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "seed for phantoms and sampling")->capture_default_str();
  app.add_flag("--deterministic", g.deterministic,
               "write timing to timing.json so reports are bit-reproducible");
  app.add_option("--out", g.out,
                 std::string("output directory (default: $") + kOutputEnv + "/<name> or ./<name>)");

  SynthOptions so;
  auto *synth = app.add_subcommand("synth", "generate a synthetic case directory");
  synth->add_option("--rows", so.rows)->capture_default_str();
  synth->add_option("--cols", so.cols)->capture_default_str();
  synth->add_option("--spacing", so.spacing, "pixel spacing in mm")->capture_default_str();
  synth->add_option("--frames", so.frames)->capture_default_str();
  synth->add_option("--amplitude", so.amplitude, "motion amplitude in mm")->capture_default_str();
  synth->add_option("--period", so.period, "motion period in frames")->capture_default_str();
  synth->add_option("--noise", so.noise, "noise sigma relative to contrast")->capture_default_str();
  synth->add_option("--frame-rate", so.frame_rate, "Hz")->capture_default_str();
  synth->add_option("--case-id", so.case_id)->capture_default_str();
  synth->add_flag("--deform", so.deform, "add a smooth deformation on top of the translation");

  TrackCliOptions to;
  RegistrationOptions tro;
  auto *trk = app.add_subcommand("track", "propagate the first mask through a case");
  trk->add_option("case", to.case_dir, "case directory")->required();
  trk->add_option("--strategy", to.strategy, "static, register_to_first or register_to_previous")
      ->capture_default_str();
  trk->add_option("--profile", tro.profile, "quality or realtime")->capture_default_str();
  trk->add_option("--budget-ms", to.budget_ms, "per-sequence wall-clock budget");
  trk->add_option("--workers", to.workers, "offline register-to-first workers")
      ->capture_default_str();
  trk->add_flag("--save-transforms", to.save_transforms, "write per-frame transform JSON");
  add_registration_flags(trk, tro);

  EvalOptions eo;
  auto *ev = app.add_subcommand("eval", "score predicted masks against ground truth");
  ev->add_option("pred", eo.pred, "result directory or directory of results")->required();
  ev->add_option("gt", eo.gt, "case directory or directory of cases")->required();
  ev->add_option("--budget-ms", eo.budget_ms, "budget for the latency summary");

  BenchOptions bo;
  RegistrationOptions bro;
  auto *bench = app.add_subcommand("bench", "compare strategies and profiles on one case");
  bench->add_option("case", bo.case_dir, "case directory with ground truth")->required();
  bench->add_option("--strategies", bo.strategies)->delimiter(',')->capture_default_str();
  bench->add_option("--profiles", bo.profiles)->delimiter(',')->capture_default_str();
  bench->add_option("--budget-ms", bo.budget_ms, "per-sequence wall-clock budget");
  bench->add_option("--workers", bo.workers)->capture_default_str();
  add_registration_flags(bench, bro);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitInput;
  }

  if (synth->parsed())
    return cmd_synth(g, so);
  if (trk->parsed())
    return cmd_track(g, to, tro);
  if (ev->parsed())
    return cmd_eval(g, eo);
  return cmd_bench(g, bo, bro);
}

} // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigurationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IoError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
