#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cinetrack/bspline.hpp"
#include "cinetrack/image.hpp"
#include "cinetrack/interpolation.hpp"

namespace cinetrack {

/// Random evaluation points for one metric evaluation.
struct MetricSample {
  std::vector<Point> points;
  std::uint64_t seed = 0;
};

/// Metric value (lower is better) and its gradient with respect to the
/// transform coefficients, laid out like BSplineFFD::coefficients().
struct MetricEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::Index valid_samples = 0;
};

/// n points drawn uniformly over `region`, reproducible from `seed`.
MetricSample draw_samples(const Rect &region, std::size_t n, std::uint64_t seed);

/// Mean squared difference (fixed(p) - moving(T(p)))^2 over valid samples.
/// Samples whose mapped point leaves the moving image are skipped; fewer than
/// half valid raises DegenerateMetricError.
MetricEval msd(const CubicInterpolant &fixed, const CubicInterpolant &moving,
               const BSplineFFD &t, const MetricSample &s);

/// Negated normalized cross correlation, in [-1, 0] for non-negative
/// correlation. Zero sample variance in either image raises
/// DegenerateMetricError.
MetricEval ncc(const CubicInterpolant &fixed, const CubicInterpolant &moving,
               const BSplineFFD &t, const MetricSample &s);

/// Per-pixel feature channels of an image. Implementations must return the
/// same number of channels, on the input geometry, for every image.
class FeatureProvider {
public:
  virtual ~FeatureProvider() = default;
  virtual std::vector<Image2Dd> channels(const Image2Dd &img) const = 0;
  virtual std::vector<std::string> channel_names() const = 0;
};

/// Hand-crafted channels: Gaussian-smoothed intensity and gradient magnitude
/// of the smoothed image, each at a list of scales.
class HandcraftedFeatures final : public FeatureProvider {
public:
  enum class Kind { intensity, gradient_magnitude };
  struct Channel {
    Kind kind;
    double sigma_mm; // 0 = unsmoothed
  };

  explicit HandcraftedFeatures(std::vector<Channel> channels);

  /// Intensity at sigma 1 mm and 4 mm plus gradient magnitude at each scale.
  static HandcraftedFeatures defaults();
  /// The raw intensity alone; feature_msd then reduces to msd.
  static HandcraftedFeatures raw_intensity();
  /// Gradient magnitude at 1 mm and 4 mm only.
  static HandcraftedFeatures gradient_only();

  std::vector<Image2Dd> channels(const Image2Dd &img) const override;
  std::vector<std::string> channel_names() const override;

private:
  std::vector<Channel> channels_;
};

/// Interpolants of every channel of one image.
struct FeatureStack {
  std::vector<CubicInterpolant> channels;
};

FeatureStack compute_features(const Image2Dd &img, const FeatureProvider &provider);

/// Sum over channels of the per-channel mean squared difference, with the
/// same sample validity rule as msd.
MetricEval feature_msd(const FeatureStack &fixed, const FeatureStack &moving,
                       const BSplineFFD &t, const MetricSample &s);

} // namespace cinetrack
