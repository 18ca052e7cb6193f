#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cinetrack/image.hpp"
#include "cinetrack/registration.hpp"

namespace cinetrack {

/// Ordered cine frames sharing one geometry, with the annotated first mask.
struct CineSequence {
  std::vector<Image2Dd> frames;
  Mask2D first_mask;
  double frame_rate_hz = 4.0;
  std::string case_id;

  void validate() const;
};

enum class Strategy { static_mask, register_to_first, register_to_previous };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string &s);

struct TrackingResult {
  std::vector<Mask2D> masks;       // masks[0] is the first mask verbatim
  std::vector<double> per_frame_ms; // frame 0 records 0
  double setup_ms = 0.0;            // one-off preparation of the first frame
  double total_ms = 0.0;
  Strategy strategy = Strategy::static_mask;
  std::optional<double> budget_ms;
  std::vector<int> budget_violations;
  std::vector<int> fallback_frames;
  std::vector<std::string> fallback_messages;
  /// Per-frame registration output; empty entries for frame 0, the static
  /// strategy and fallbacks. Register-to-previous stores the frame-to-previous
  /// transform.
  std::vector<std::optional<BSplineFFD>> transforms;
  std::vector<std::optional<RegistrationReport>> reports;
};

struct TrackOptions {
  /// Per-sequence wall-clock budget; unset disables budget flags.
  std::optional<double> budget_ms_per_sequence;
  /// Workers for offline register-to-first evaluation. Timings measured with
  /// more than one worker are not streaming latencies.
  int workers = 1;
};

/// Propagates the first mask through the sequence. Frames over the per-frame
/// share of the budget are flagged, never skipped. A registration failure
/// falls back to the previous frame's mask and is recorded.
TrackingResult track(const CineSequence &seq, Strategy strategy,
                     const RegistrationConfig &cfg, const TrackOptions &options = {});

struct LatencySummary {
  std::size_t frames = 0; // timed frames (t >= 1)
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
  double total_ms = 0.0;
  std::optional<double> budget_ms;
  /// total_ms strictly below the budget; true when no budget is set.
  bool within_budget = true;
  /// 1000 / p95_ms.
  double effective_rate_hz = 0.0;
};

LatencySummary latency_report(const TrackingResult &r, std::optional<double> budget_ms);

/// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
double percentile(std::vector<double> values, double q);

} // namespace cinetrack
