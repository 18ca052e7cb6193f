#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cinetrack/bspline.hpp"
#include "cinetrack/image.hpp"
#include "cinetrack/optimizer.hpp"
#include "cinetrack/similarity.hpp"

namespace cinetrack {

enum class MetricKind { msd, ncc, feature_msd };
enum class Profile { quality, realtime };

std::string to_string(MetricKind m);
std::string to_string(Profile p);
MetricKind parse_metric(const std::string &s);
Profile parse_profile(const std::string &s);

struct RegistrationConfig {
  double control_spacing_mm = 12.0;
  int levels = 2;
  int iterations_per_level = 200;
  int samples_per_iteration = 500;
  MetricKind metric = MetricKind::msd;
  std::uint64_t seed = 0;
  Profile profile = Profile::quality;
  /// Weight of the optional bending penalty; 0 disables it.
  double bending_weight = 0.0;
  std::optional<double> step_a;
  double step_A = 20.0;
  double step_alpha = 0.602;
  std::optional<double> gradient_tolerance;
  /// Threshold applied after linear resampling in warp_mask.
  double mask_threshold = 0.5;

  /// 12 mm control spacing, 2 levels, 200 iterations, 500 samples.
  static RegistrationConfig quality();
  /// 24 mm control spacing, 1 level, 50 iterations, 250 samples.
  static RegistrationConfig realtime();
  static RegistrationConfig for_profile(Profile p);

  /// levels x iterations x samples.
  std::uint64_t total_work() const {
    return static_cast<std::uint64_t>(levels) * iterations_per_level * samples_per_iteration;
  }

  void validate() const;
};

struct LevelReport {
  int level = 0; // 0 = finest
  Geometry fixed_geometry;
  Eigen::Vector2d control_spacing = Eigen::Vector2d::Zero();
  Eigen::Index grid_rows = 0;
  Eigen::Index grid_cols = 0;
  OptimizationTrace trace;
  double ms = 0.0;
};

struct RegistrationReport {
  std::vector<LevelReport> levels; // in execution order, coarsest first
  double setup_ms = 0.0;
  double evaluation_ms = 0.0;
  double total_ms = 0.0;
  /// Metric at the identity and at the result, on one shared finest-level sample.
  double initial_value = 0.0;
  double final_value = 0.0;
  bool failed = false;
  std::string message;
};

class RegistrationError : public Error {
public:
  RegistrationError(const std::string &what, RegistrationReport report)
      : Error(what), report_(std::move(report)) {}
  const RegistrationReport &report() const { return report_; }

private:
  RegistrationReport report_;
};

/// Pyramid and interpolants of one image, reusable across registrations that
/// share it (the first frame in register-to-first tracking).
class PreparedImage {
public:
  PreparedImage(const Image2Dd &img, const RegistrationConfig &cfg);

  int levels() const { return static_cast<int>(pyramid_.size()); }
  const Geometry &geometry(int level) const { return pyramid_[level].geometry(); }
  const CubicInterpolant &interpolant(int level) const { return interp_[level]; }
  const FeatureStack &features(int level) const { return features_[level]; }

private:
  std::vector<Image2Dd> pyramid_;
  std::vector<CubicInterpolant> interp_;
  std::vector<FeatureStack> features_;
};

struct RegistrationResult {
  BSplineFFD transform;
  RegistrationReport report;
};

/// Coarse-to-fine B-spline registration. The result maps points of the fixed
/// domain into the moving image. Throws RegistrationError (carrying the
/// report) on a degenerate or non-finite objective.
RegistrationResult register_images(const PreparedImage &fixed, const PreparedImage &moving,
                                   const RegistrationConfig &cfg);

template <typename Scalar>
RegistrationResult register_images(const Image2D<Scalar> &fixed,
                                   const Image2D<Scalar> &moving,
                                   const RegistrationConfig &cfg) {
  const PreparedImage f(fixed.template cast<double>(), cfg);
  const PreparedImage m(moving.template cast<double>(), cfg);
  return register_images(f, m, cfg);
}

/// Point mapping from a target domain into the source mask; nullopt reads as
/// background.
using PointMapping = std::function<std::optional<Point>(const Point &)>;

/// For every target pixel centre p, sample `mask` linearly at mapping(p) and
/// keep the pixel when the value is >= threshold. An optional per-axis bound
/// on |mapping(p) - p| restricts the work to pixels that can reach the
/// foreground; the result is the same.
Mask2D warp_mask(const Mask2D &mask, const PointMapping &mapping, const Geometry &target,
                 double threshold = 0.5,
                 const std::optional<Eigen::Vector2d> &max_displacement = std::nullopt);

/// Per-axis bound on the displacement of t anywhere in its covered region.
Eigen::Vector2d displacement_bound(const BSplineFFD &t);

Mask2D warp_mask(const Mask2D &mask, const BSplineFFD &t, const Geometry &target,
                 double threshold = 0.5);

/// Stateless 64-bit mixer used to derive per-iteration and per-frame seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace cinetrack
