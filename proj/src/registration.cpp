#include "cinetrack/registration.hpp"

#include <algorithm>
#include <limits>
#include <chrono>
#include <cmath>

#include "cinetrack/interpolation.hpp"
#include "cinetrack/pyramid.hpp"

namespace cinetrack {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point since) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - since).count();
}

} // namespace

std::string to_string(MetricKind m) {
  switch (m) {
  case MetricKind::msd:
    return "msd";
  case MetricKind::ncc:
    return "ncc";
  case MetricKind::feature_msd:
    return "feature_msd";
  }
  return "unknown";
}

std::string to_string(Profile p) {
  return p == Profile::quality ? "quality" : "realtime";
}

MetricKind parse_metric(const std::string &s) {
  if (s == "msd")
    return MetricKind::msd;
  if (s == "ncc")
    return MetricKind::ncc;
  if (s == "feature_msd")
    return MetricKind::feature_msd;
  throw ConfigurationError("unknown metric '" + s + "'");
}

Profile parse_profile(const std::string &s) {
  if (s == "quality")
    return Profile::quality;
  if (s == "realtime")
    return Profile::realtime;
  throw ConfigurationError("unknown profile '" + s + "'");
}

RegistrationConfig RegistrationConfig::quality() { return RegistrationConfig{}; }

RegistrationConfig RegistrationConfig::realtime() {
  RegistrationConfig c;
  c.profile = Profile::realtime;
  c.control_spacing_mm = 24.0;
  c.levels = 1;
  c.iterations_per_level = 50;
  c.samples_per_iteration = 250;
  return c;
}

RegistrationConfig RegistrationConfig::for_profile(Profile p) {
  return p == Profile::quality ? quality() : realtime();
}

void RegistrationConfig::validate() const {
  if (!(control_spacing_mm > 0.0))
    throw ConfigurationError("registration: control spacing must be > 0");
  if (levels < 1)
    throw ConfigurationError("registration: levels must be >= 1");
  if (iterations_per_level < 1)
    throw ConfigurationError("registration: iterations_per_level must be >= 1");
  if (samples_per_iteration < 1)
    throw ConfigurationError("registration: samples_per_iteration must be >= 1");
  if (!(bending_weight >= 0.0))
    throw ConfigurationError("registration: bending weight must be >= 0");
  if (!(mask_threshold > 0.0 && mask_threshold <= 1.0))
    throw ConfigurationError("registration: mask threshold must lie in (0, 1]");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over a combined state
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PreparedImage::PreparedImage(const Image2Dd &img, const RegistrationConfig &cfg) {
  pyramid_ = build_pyramid(img, cfg.levels);
  for (const auto &level : pyramid_) {
    interp_.emplace_back(level);
    if (cfg.metric == MetricKind::feature_msd)
      features_.push_back(compute_features(level, HandcraftedFeatures::defaults()));
    else
      features_.emplace_back();
  }
}

namespace {

MetricEval evaluate_metric(const PreparedImage &fixed, const PreparedImage &moving,
                           int level, const BSplineFFD &t, const MetricSample &s,
                           const RegistrationConfig &cfg) {
  MetricEval e;
  switch (cfg.metric) {
  case MetricKind::msd:
    e = msd(fixed.interpolant(level), moving.interpolant(level), t, s);
    break;
  case MetricKind::ncc:
    e = ncc(fixed.interpolant(level), moving.interpolant(level), t, s);
    break;
  case MetricKind::feature_msd:
    e = feature_msd(fixed.features(level), moving.features(level), t, s);
    break;
  }
  if (cfg.bending_weight > 0.0) {
    Eigen::VectorXd g;
    e.value += cfg.bending_weight * bending_penalty(t, &g);
    e.gradient += cfg.bending_weight * g;
  }
  return e;
}

Rect intersect(const Rect &a, const Rect &b) {
  return {a.min.cwiseMax(b.min), a.max.cwiseMin(b.max)};
}

} // namespace

RegistrationResult register_images(const PreparedImage &fixed, const PreparedImage &moving,
                                   const RegistrationConfig &cfg) {
  const auto start = clock_type::now();
  cfg.validate();
  if (fixed.levels() != cfg.levels || moving.levels() != cfg.levels)
    throw ConfigurationError("register_images: prepared pyramids do not match the config");

  RegistrationReport report;
  const Rect domain = Rect::of(fixed.geometry(0));
  const MetricSample final_sample =
      draw_samples(domain, static_cast<std::size_t>(cfg.samples_per_iteration),
                   mix_seed(cfg.seed, 0xF1A1ULL));

  auto fail = [&](const std::string &msg) {
    report.failed = true;
    report.message = msg;
    report.total_ms = elapsed_ms(start);
    throw RegistrationError(msg, report);
  };

  BSplineFFD current;
  try {
    const auto eval_start = clock_type::now();
    const BSplineFFD identity = BSplineFFD::identity(
        domain, Eigen::Vector2d::Constant(cfg.control_spacing_mm));
    report.initial_value =
        evaluate_metric(fixed, moving, 0, identity, final_sample, cfg).value;
    report.evaluation_ms += elapsed_ms(eval_start);
  } catch (const DegenerateMetricError &e) {
    fail(std::string("registration: ") + e.what());
  }
  report.setup_ms = elapsed_ms(start) - report.evaluation_ms;

  for (int level = cfg.levels - 1; level >= 0; --level) {
    const auto level_start = clock_type::now();
    const double factor = std::ldexp(1.0, level);
    const Eigen::Vector2d spacing = Eigen::Vector2d::Constant(cfg.control_spacing_mm * factor);
    if (level == cfg.levels - 1)
      current = BSplineFFD::identity(domain, spacing);
    else
      current = upsample_to_level(current, domain, spacing);

    const Geometry &lg = fixed.geometry(level);
    const Rect region = intersect(domain, Rect::of(lg));
    OptimizerConfig oc;
    oc.iterations_per_level = cfg.iterations_per_level;
    oc.levels = cfg.levels;
    oc.step_a = cfg.step_a;
    oc.step_A = cfg.step_A;
    oc.step_alpha = cfg.step_alpha;
    oc.step_delta_mm = lg.spacing.minCoeff();
    oc.gradient_tolerance = cfg.gradient_tolerance;
    oc.seed = cfg.seed;

    const std::uint64_t level_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(level));
    const auto n = static_cast<std::size_t>(cfg.samples_per_iteration);
    MetricFunction fn = [&](const BSplineFFD &t, int k) {
      const MetricSample s = draw_samples(region, n, mix_seed(level_seed, static_cast<std::uint64_t>(k)));
      return evaluate_metric(fixed, moving, level, t, s, cfg);
    };

    LevelReport lr;
    lr.level = level;
    lr.fixed_geometry = lg;
    lr.control_spacing = spacing;
    lr.grid_rows = current.grid_rows();
    lr.grid_cols = current.grid_cols();
    try {
      auto res = optimize(fn, current, oc);
      current = std::move(res.transform);
      lr.trace = std::move(res.trace);
    } catch (const OptimizationError &e) {
      lr.trace = e.trace();
      lr.ms = elapsed_ms(level_start);
      report.levels.push_back(std::move(lr));
      fail(std::string("registration: level ") + std::to_string(level) + ": " + e.what());
    }
    lr.ms = elapsed_ms(level_start);
    report.levels.push_back(std::move(lr));
  }

  try {
    const auto eval_start = clock_type::now();
    report.final_value = evaluate_metric(fixed, moving, 0, current, final_sample, cfg).value;
    report.evaluation_ms += elapsed_ms(eval_start);
  } catch (const DegenerateMetricError &e) {
    fail(std::string("registration: final evaluation: ") + e.what());
  }
  if (!current.coefficients().allFinite())
    fail("registration: non-finite transform");
  report.total_ms = elapsed_ms(start);
  return {std::move(current), std::move(report)};
}

Eigen::Vector2d displacement_bound(const BSplineFFD &t) {
  // B-spline weights are non-negative and sum to one.
  const Eigen::Index n = t.node_count();
  return {t.coefficients().head(n).cwiseAbs().maxCoeff(),
          t.coefficients().tail(n).cwiseAbs().maxCoeff()};
}

Mask2D warp_mask(const Mask2D &mask, const PointMapping &mapping, const Geometry &target,
                 double threshold, const std::optional<Eigen::Vector2d> &max_displacement) {
  // Without a bound every target pixel is mapped. With one, pixels whose
  // image cannot land within one spacing of a foreground pixel sample to
  // exactly zero and are skipped.
  Point lo = Point::Constant(-std::numeric_limits<double>::infinity());
  Point hi = Point::Constant(std::numeric_limits<double>::infinity());
  if (max_displacement && threshold > 0.0) {
    const Geometry &mg = mask.geometry();
    Eigen::Index r0 = mg.rows, r1 = -1, c0 = mg.cols, c1 = -1;
    for (Eigen::Index r = 0; r < mg.rows; ++r)
      for (Eigen::Index c = 0; c < mg.cols; ++c)
        if (mask(r, c)) {
          r0 = std::min(r0, r);
          r1 = std::max(r1, r);
          c0 = std::min(c0, c);
          c1 = std::max(c1, c);
        }
    if (r1 < 0)
      return Mask2D(target);
    const Eigen::Vector2d margin =
        max_displacement->cwiseAbs() + mg.spacing + Eigen::Vector2d::Constant(1e-9);
    lo = mg.pixel_center(r0, c0) - margin;
    hi = mg.pixel_center(r1, c1) + margin;
  }

  Mask2D::Storage out = Mask2D::Storage::Zero(target.rows, target.cols);
  for (Eigen::Index r = 0; r < target.rows; ++r) {
    for (Eigen::Index c = 0; c < target.cols; ++c) {
      const Point p = target.pixel_center(r, c);
      if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any())
        continue;
      const auto q = mapping(p);
      out(r, c) = (q && sample_linear(mask, *q) >= threshold) ? 1 : 0;
    }
  }
  return Mask2D(target, std::move(out));
}

Mask2D warp_mask(const Mask2D &mask, const BSplineFFD &t, const Geometry &target,
                 double threshold) {
  return warp_mask(
      mask, [&t](const Point &p) { return try_transform_point(t, p); }, target, threshold,
      displacement_bound(t));
}

} // namespace cinetrack
