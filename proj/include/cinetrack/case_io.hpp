#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cinetrack/report_io.hpp"
#include "cinetrack/tracker.hpp"

namespace cinetrack {

// Case directory:
//   frames.mha      2D+t float stack
//   first_mask.mha  2D uchar mask
//   gt_masks.mha    optional 2D+t uchar stack
//   case.json       {"case_id", "frame_rate_hz", "field_strength_t"?}
//
// Result directory:
//   masks/frame_NNNN.mha
//   summary.json    strategy, config, fallbacks, timing
//   timing.json     wall-clock fields when the summary withholds them
inline const char *const kFramesFile = "frames.mha";
inline const char *const kFirstMaskFile = "first_mask.mha";
inline const char *const kGtMasksFile = "gt_masks.mha";
inline const char *const kCaseMetaFile = "case.json";
inline const char *const kSummaryFile = "summary.json";
inline const char *const kTimingFile = "timing.json";

struct CaseData {
  CineSequence sequence;
  std::optional<std::vector<Mask2D>> gt_masks;
  std::optional<double> field_strength_t;
};

bool is_case_dir(const std::filesystem::path &dir);
bool is_result_dir(const std::filesystem::path &dir);

/// Validates everything before the first byte is written.
void write_case(const std::filesystem::path &dir, const CaseData &c);
CaseData read_case(const std::filesystem::path &dir);

/// Reads only the ground-truth stack; InputError if the case has none.
std::vector<Mask2D> read_gt_masks(const std::filesystem::path &case_dir);

struct ResultMeta {
  std::string case_id;
  std::optional<RegistrationConfig> config;
};

/// `config` is omitted for the static strategy. With include_timing = false
/// the summary carries "timing": null and the timing goes to timing.json.
void write_tracking_result(const std::filesystem::path &dir, const TrackingResult &r,
                           const ResultMeta &meta, const ReportOptions &opt = {});

nlohmann::json tracking_summary_json(const TrackingResult &r, const ResultMeta &meta,
                                     const ReportOptions &opt = {});

struct StoredResult {
  TrackingResult result;
  ResultMeta meta;
};

StoredResult read_tracking_result(const std::filesystem::path &dir);

} // namespace cinetrack
