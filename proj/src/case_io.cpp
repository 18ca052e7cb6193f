#include "cinetrack/case_io.hpp"

#include <cstdio>

#include "cinetrack/metaimage.hpp"

namespace cinetrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_file(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.mha", t);
  return buf;
}

json timing_json(const TrackingResult &r) {
  return {{"setup_ms", r.setup_ms},
          {"total_ms", r.total_ms},
          {"per_frame_ms", r.per_frame_ms},
          {"budget_violations", r.budget_violations},
          {"latency", to_json(latency_report(r, r.budget_ms))}};
}

void apply_timing(TrackingResult &r, const json &j) {
  r.setup_ms = j.at("setup_ms").get<double>();
  r.total_ms = j.at("total_ms").get<double>();
  r.per_frame_ms = j.at("per_frame_ms").get<std::vector<double>>();
  r.budget_violations = j.at("budget_violations").get<std::vector<int>>();
}

} // namespace

bool is_case_dir(const fs::path &dir) {
  return fs::is_regular_file(dir / kFramesFile) && fs::is_regular_file(dir / kCaseMetaFile);
}

bool is_result_dir(const fs::path &dir) { return fs::is_regular_file(dir / kSummaryFile); }

void write_case(const fs::path &dir, const CaseData &c) {
  c.sequence.validate();
  if (c.gt_masks) {
    if (c.gt_masks->size() != c.sequence.frames.size())
      throw InputError("case: ground-truth count differs from frame count");
    for (const auto &m : *c.gt_masks)
      if (!(m.geometry() == c.sequence.frames.front().geometry()))
        throw InputError("case: ground-truth geometry differs from frames");
  }
  fs::create_directories(dir);
  const double dt = 1.0 / c.sequence.frame_rate_hz;
  write_image_stack(c.sequence.frames, dir / kFramesFile, ElementType::met_float, dt);
  write_mask(c.sequence.first_mask, dir / kFirstMaskFile);
  if (c.gt_masks)
    write_mask_stack(*c.gt_masks, dir / kGtMasksFile, dt);
  json meta = {{"case_id", c.sequence.case_id}, {"frame_rate_hz", c.sequence.frame_rate_hz}};
  if (c.field_strength_t)
    meta["field_strength_t"] = *c.field_strength_t;
  write_json(meta, dir / kCaseMetaFile);
}

CaseData read_case(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw InputError("case: not a directory: " + dir.string());
  if (!fs::is_regular_file(dir / kCaseMetaFile))
    throw InputError("case: missing " + std::string(kCaseMetaFile) + " in " + dir.string());
  CaseData c;
  const json meta = read_json(dir / kCaseMetaFile);
  try {
    c.sequence.case_id = meta.at("case_id").get<std::string>();
    if (meta.contains("frame_rate_hz"))
      c.sequence.frame_rate_hz = meta.at("frame_rate_hz").get<double>();
    if (meta.contains("field_strength_t") && !meta.at("field_strength_t").is_null())
      c.field_strength_t = meta.at("field_strength_t").get<double>();
  } catch (const json::exception &e) {
    throw CorruptFileError("case: malformed metadata: " + std::string(e.what()));
  }
  c.sequence.frames = read_image_stack(dir / kFramesFile);
  c.sequence.first_mask = read_mask(dir / kFirstMaskFile);
  c.sequence.validate();
  if (fs::is_regular_file(dir / kGtMasksFile)) {
    auto gt = read_mask_stack(dir / kGtMasksFile);
    if (gt.size() != c.sequence.frames.size())
      throw InputError("case: ground-truth count differs from frame count");
    for (const auto &m : gt)
      require_same_geometry(m.geometry(), c.sequence.frames.front().geometry(),
                            "case ground truth");
    c.gt_masks = std::move(gt);
  }
  return c;
}

std::vector<Mask2D> read_gt_masks(const fs::path &case_dir) {
  if (!fs::is_regular_file(case_dir / kGtMasksFile))
    throw InputError("case: no ground truth in " + case_dir.string());
  return read_mask_stack(case_dir / kGtMasksFile);
}

json tracking_summary_json(const TrackingResult &r, const ResultMeta &meta,
                           const ReportOptions &opt) {
  return {{"schema_version", kReportSchemaVersion},
          {"case_id", meta.case_id},
          {"strategy", to_string(r.strategy)},
          {"frame_count", r.masks.size()},
          {"config", meta.config ? to_json(*meta.config) : json(nullptr)},
          {"budget_ms", r.budget_ms ? json(*r.budget_ms) : json(nullptr)},
          {"fallback_frames", r.fallback_frames},
          {"fallback_messages", r.fallback_messages},
          {"timing", opt.include_timing ? timing_json(r) : json(nullptr)}};
}

void write_tracking_result(const fs::path &dir, const TrackingResult &r, const ResultMeta &meta,
                           const ReportOptions &opt) {
  fs::create_directories(dir / "masks");
  for (std::size_t t = 0; t < r.masks.size(); ++t)
    write_mask(r.masks[t], dir / "masks" / frame_file(t));
  write_json(tracking_summary_json(r, meta, opt), dir / kSummaryFile);
  if (!opt.include_timing)
    write_json(timing_json(r), dir / kTimingFile);
}

StoredResult read_tracking_result(const fs::path &dir) {
  if (!is_result_dir(dir))
    throw InputError("result: missing " + std::string(kSummaryFile) + " in " + dir.string());
  const json s = read_json(dir / kSummaryFile);
  StoredResult out;
  try {
    if (s.at("schema_version").get<int>() != kReportSchemaVersion)
      throw IoError("result: unsupported schema_version");
    out.meta.case_id = s.at("case_id").get<std::string>();
    if (!s.at("config").is_null())
      out.meta.config = registration_config_from_json(s.at("config"));
    TrackingResult &r = out.result;
    r.strategy = parse_strategy(s.at("strategy").get<std::string>());
    if (!s.at("budget_ms").is_null())
      r.budget_ms = s.at("budget_ms").get<double>();
    r.fallback_frames = s.at("fallback_frames").get<std::vector<int>>();
    r.fallback_messages = s.at("fallback_messages").get<std::vector<std::string>>();
    const auto n = s.at("frame_count").get<std::size_t>();
    for (std::size_t t = 0; t < n; ++t)
      r.masks.push_back(read_mask(dir / "masks" / frame_file(t)));
    if (!s.at("timing").is_null())
      apply_timing(r, s.at("timing"));
    else if (fs::is_regular_file(dir / kTimingFile))
      apply_timing(r, read_json(dir / kTimingFile));
    else
      r.per_frame_ms.assign(n, 0.0);
  } catch (const json::exception &e) {
    throw CorruptFileError("result: malformed summary: " + std::string(e.what()));
  }
  return out;
}

} // namespace cinetrack
