#include "cinetrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cinetrack {

double dsc(const Mask2D &a, const Mask2D &b) {
  require_same_geometry(a.geometry(), b.geometry(), "dsc");
  const auto av = a.values().cast<Eigen::Index>();
  const auto bv = b.values().cast<Eigen::Index>();
  const Eigen::Index inter = (av * bv).sum();
  const Eigen::Index total = av.sum() + bv.sum();
  if (total == 0)
    return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

namespace {

bool is_boundary(const Mask2D &m, Eigen::Index r, Eigen::Index c) {
  if (!m(r, c))
    return false;
  if (r == 0 || c == 0 || r == m.rows() - 1 || c == m.cols() - 1)
    return true;
  return !m(r - 1, c) || !m(r + 1, c) || !m(r, c - 1) || !m(r, c + 1);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas w2 (p - q)^2 + f(q) (Felzenszwalb-Huttenlocher),
// skipping infinite sites.
void distance_transform_1d(const std::vector<double> &f, double w2, std::vector<double> &d) {
  const auto n = static_cast<std::ptrdiff_t>(f.size());
  std::vector<std::ptrdiff_t> v(f.size());
  std::vector<double> z(f.size() + 1);
  std::ptrdiff_t k = -1;
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    if (f[q] == kInf)
      continue;
    while (k >= 0) {
      const double dq = static_cast<double>(q), dv = static_cast<double>(v[k]);
      const double s = ((f[q] + w2 * dq * dq) - (f[v[k]] + w2 * dv * dv)) / (2.0 * w2 * (dq - dv));
      if (s <= z[k]) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
    }
  }
  d.assign(f.size(), kInf);
  if (k < 0)
    return;
  k = 0;
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    while (z[k + 1] < static_cast<double>(p))
      ++k;
    const double dp = static_cast<double>(p - v[k]);
    d[p] = w2 * dp * dp + f[v[k]];
  }
}

// Squared distance (mm^2) from every pixel to the nearest boundary pixel.
GridArray<double> squared_distance_map(const Mask2D &m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  const double wx = m.geometry().spacing.x() * m.geometry().spacing.x();
  const double wy = m.geometry().spacing.y() * m.geometry().spacing.y();
  GridArray<double> g(rows, cols);
  std::vector<double> f(static_cast<std::size_t>(rows)), d;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r)
      f[r] = is_boundary(m, r, c) ? 0.0 : kInf;
    distance_transform_1d(f, wy, d);
    for (Eigen::Index r = 0; r < rows; ++r)
      g(r, c) = d[r];
  }
  f.resize(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c)
      f[c] = g(r, c);
    distance_transform_1d(f, wx, d);
    for (Eigen::Index c = 0; c < cols; ++c)
      g(r, c) = d[c];
  }
  return g;
}

void directed_distances(const Mask2D &from, const GridArray<double> &to_map,
                        std::vector<double> &out) {
  for (Eigen::Index r = 0; r < from.rows(); ++r)
    for (Eigen::Index c = 0; c < from.cols(); ++c)
      if (is_boundary(from, r, c))
        out.push_back(std::sqrt(to_map(r, c)));
}

} // namespace

std::vector<Point> boundary_points(const Mask2D &m) {
  std::vector<Point> pts;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (is_boundary(m, r, c))
        pts.push_back(m.geometry().pixel_center(r, c));
  return pts;
}

SurfaceDistances surface_distances(const Mask2D &a, const Mask2D &b) {
  require_same_geometry(a.geometry(), b.geometry(), "surface_distances");
  if (a.empty() || b.empty())
    throw UndefinedMetricError("surface_distances: empty mask");
  std::vector<double> pooled;
  directed_distances(a, squared_distance_map(b), pooled);
  directed_distances(b, squared_distance_map(a), pooled);
  SurfaceDistances s;
  s.hd_mm = *std::max_element(pooled.begin(), pooled.end());
  s.hd95_mm = percentile(pooled, 0.95);
  s.asd_mm = std::accumulate(pooled.begin(), pooled.end(), 0.0) /
             static_cast<double>(pooled.size());
  return s;
}

Point centroid(const Mask2D &m) {
  Point sum = Point::Zero();
  Eigen::Index count = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c)) {
        sum += Eigen::Vector2d(static_cast<double>(c), static_cast<double>(r));
        ++count;
      }
  if (count == 0)
    throw UndefinedMetricError("centroid: empty mask");
  const Eigen::Vector2d idx = sum / static_cast<double>(count);
  return m.geometry().origin + idx.cwiseProduct(m.geometry().spacing);
}

double centroid_distance(const Mask2D &a, const Mask2D &b) {
  require_same_geometry(a.geometry(), b.geometry(), "centroid_distance");
  return (centroid(a) - centroid(b)).norm();
}

FrameMetrics evaluate_frame(const Mask2D &pred, const Mask2D &gt) {
  FrameMetrics fm;
  fm.dsc = dsc(pred, gt);
  if (pred.empty() || gt.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fm.hd_mm = fm.hd95_mm = fm.asd_mm = fm.cd_mm = nan;
    fm.valid = false;
    return fm;
  }
  const auto sd = surface_distances(pred, gt);
  fm.hd_mm = sd.hd_mm;
  fm.hd95_mm = sd.hd95_mm;
  fm.asd_mm = sd.asd_mm;
  fm.cd_mm = centroid_distance(pred, gt);
  return fm;
}

MetricAggregate aggregate(const std::vector<double> &values, bool higher_is_better) {
  MetricAggregate a;
  a.count = values.size();
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    a.mean = a.median = a.worst = nan;
    return a;
  }
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  a.median = percentile(values, 0.5);
  a.worst = higher_is_better ? *std::min_element(values.begin(), values.end())
                             : *std::max_element(values.begin(), values.end());
  return a;
}

void recompute_aggregates(MetricsReport &report) {
  std::vector<double> d, h, h95, as, cd;
  report.excluded_frames = 0;
  for (const auto &f : report.frames) {
    d.push_back(f.dsc);
    if (!f.valid) {
      ++report.excluded_frames;
      continue;
    }
    h.push_back(f.hd_mm);
    h95.push_back(f.hd95_mm);
    as.push_back(f.asd_mm);
    cd.push_back(f.cd_mm);
  }
  report.dsc = aggregate(d, true);
  report.hd = aggregate(h, false);
  report.hd95 = aggregate(h95, false);
  report.asd = aggregate(as, false);
  report.cd = aggregate(cd, false);
}

MetricsReport evaluate_sequence(const TrackingResult &pred, const std::vector<Mask2D> &gt,
                                std::optional<double> timing_budget_ms) {
  if (pred.masks.size() != gt.size())
    throw InputError("evaluate_sequence: " + std::to_string(pred.masks.size()) +
                     " predicted frames vs " + std::to_string(gt.size()) +
                     " ground-truth frames");
  MetricsReport report;
  for (std::size_t t = 1; t < gt.size(); ++t) {
    FrameMetrics fm = evaluate_frame(pred.masks[t], gt[t]);
    fm.frame = static_cast<int>(t);
    fm.ms = t < pred.per_frame_ms.size() ? pred.per_frame_ms[t] : 0.0;
    report.frames.push_back(fm);
  }
  recompute_aggregates(report);
  report.latency = latency_report(pred, timing_budget_ms);
  return report;
}

} // namespace cinetrack
