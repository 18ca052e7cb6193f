#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cinetrack/image.hpp"
#include "cinetrack/tracker.hpp"

namespace cinetrack {

/// 2|A n B| / (|A| + |B|). Both empty gives 1, exactly one empty gives 0.
double dsc(const Mask2D &a, const Mask2D &b);

struct SurfaceDistances {
  double hd_mm = 0.0;
  double hd95_mm = 0.0;
  double asd_mm = 0.0;
};

/// Pixel centres of foreground pixels with a background 4-neighbour or lying
/// on the image edge, in mm.
std::vector<Point> boundary_points(const Mask2D &m);

/// Symmetric surface distances between the boundaries of a and b. The two
/// directed nearest-neighbour distance sets are pooled: HD is their maximum,
/// HD95 their 95th percentile, ASD their mean. Nearest distances come from an
/// exact Euclidean distance transform of each boundary.
/// Throws UndefinedMetricError if either mask is empty.
SurfaceDistances surface_distances(const Mask2D &a, const Mask2D &b);

/// Foreground centroid in mm. Throws UndefinedMetricError for an empty mask.
Point centroid(const Mask2D &m);

double centroid_distance(const Mask2D &a, const Mask2D &b);

struct FrameMetrics {
  int frame = 0;
  double dsc = 0.0;
  // NaN when undefined (valid == false).
  double hd_mm = 0.0;
  double hd95_mm = 0.0;
  double asd_mm = 0.0;
  double cd_mm = 0.0;
  double ms = 0.0;
  bool valid = true;
};

/// All metrics of one frame; distance fields become NaN with valid = false
/// when either mask is empty.
FrameMetrics evaluate_frame(const Mask2D &pred, const Mask2D &gt);

struct MetricAggregate {
  double mean = 0.0;
  double median = 0.0;
  double worst = 0.0; // minimum for DSC, maximum for distances
  std::size_t count = 0;
};

struct MetricsReport {
  std::string case_id;
  std::vector<FrameMetrics> frames; // t >= 1
  MetricAggregate dsc;
  MetricAggregate hd;
  MetricAggregate hd95;
  MetricAggregate asd;
  MetricAggregate cd;
  /// Frames left out of the distance aggregates.
  std::size_t excluded_frames = 0;
  LatencySummary latency;
};

MetricAggregate aggregate(const std::vector<double> &values, bool higher_is_better);

/// Per-frame metrics for t >= 1 (frame 0 is the prompt) plus aggregates and
/// the latency summary. Throws InputError on a frame-count mismatch.
MetricsReport evaluate_sequence(const TrackingResult &pred, const std::vector<Mask2D> &gt,
                                std::optional<double> timing_budget_ms);

/// Recomputes aggregates from report.frames (used after loading and for
/// multi-case summaries).
void recompute_aggregates(MetricsReport &report);

} // namespace cinetrack
