#include "cinetrack/similarity.hpp"

#include <cmath>
#include <random>

#include "cinetrack/pyramid.hpp"

namespace cinetrack {

MetricSample draw_samples(const Rect &region, std::size_t n, std::uint64_t seed) {
  if (n == 0)
    throw ConfigurationError("draw_samples: sample count must be >= 1");
  const Eigen::Vector2d size = region.size();
  if (!(size.x() > 0.0) || !(size.y() > 0.0))
    throw ConfigurationError("draw_samples: empty sampling region");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.min.x(), region.max.x());
  std::uniform_real_distribution<double> uy(region.min.y(), region.max.y());
  MetricSample s;
  s.seed = seed;
  s.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    s.points.emplace_back(x, y);
  }
  return s;
}

namespace {

// One sample that maps inside the moving image.
struct Mapped {
  Point p;
  Point q;
  Stencil stencil;
};

std::vector<Mapped> map_samples(const CubicInterpolant &moving, const BSplineFFD &t,
                                const MetricSample &s) {
  std::vector<Mapped> out;
  out.reserve(s.points.size());
  for (const Point &p : s.points) {
    auto st = try_point_jacobian(t, p);
    if (!st)
      continue;
    const Point q = p + displacement(t, *st);
    if (!moving.contains(q))
      continue;
    out.push_back({p, q, *st});
  }
  if (2 * out.size() < s.points.size())
    throw DegenerateMetricError("similarity: fewer than half of the samples map "
                                "inside the moving image (" +
                                std::to_string(out.size()) + " of " +
                                std::to_string(s.points.size()) + ")");
  return out;
}

// gradient += factor * dm/dx(q) * dT/dmu over the stencil
void scatter(Eigen::VectorXd &grad, Eigen::Index n, const Stencil &st,
             const Eigen::Vector2d &factor) {
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      const double w = st.weights(j, i);
      const Eigen::Index k = st.node(j, i);
      grad[k] += factor.x() * w;
      grad[n + k] += factor.y() * w;
    }
  }
}

void require_finite(const MetricEval &e, const char *name) {
  if (!std::isfinite(e.value) || !e.gradient.allFinite())
    throw DegenerateMetricError(std::string(name) + ": non-finite value or gradient");
}

} // namespace

MetricEval msd(const CubicInterpolant &fixed, const CubicInterpolant &moving,
               const BSplineFFD &t, const MetricSample &s) {
  const auto mapped = map_samples(moving, t, s);
  const Eigen::Index n = t.node_count();
  MetricEval e;
  e.gradient = Eigen::VectorXd::Zero(t.parameter_count());
  e.valid_samples = static_cast<Eigen::Index>(mapped.size());
  const double inv = 1.0 / static_cast<double>(mapped.size());
  double sum = 0.0;
  Eigen::Vector2d gm;
  double m = 0.0;
  for (const auto &smp : mapped) {
    const double f = fixed.sample(smp.p);
    moving.sample_with_gradient(smp.q, m, gm);
    const double diff = f - m;
    sum += diff * diff;
    scatter(e.gradient, n, smp.stencil, (-2.0 * inv * diff) * gm);
  }
  e.value = sum * inv;
  require_finite(e, "msd");
  return e;
}

MetricEval ncc(const CubicInterpolant &fixed, const CubicInterpolant &moving,
               const BSplineFFD &t, const MetricSample &s) {
  const auto mapped = map_samples(moving, t, s);
  const auto count = static_cast<Eigen::Index>(mapped.size());
  const double inv = 1.0 / static_cast<double>(count);
  Eigen::VectorXd f(count), m(count);
  std::vector<Eigen::Vector2d> gm(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto &smp = mapped[static_cast<std::size_t>(i)];
    f[i] = fixed.sample(smp.p);
    moving.sample_with_gradient(smp.q, m[i], gm[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd fc = f.array() - f.mean();
  const Eigen::VectorXd mc = m.array() - m.mean();
  const double sff = fc.squaredNorm();
  const double smm = mc.squaredNorm();
  const double sfm = fc.dot(mc);
  if (sff * inv <= 1e-12 || smm * inv <= 1e-12)
    throw DegenerateMetricError("ncc: zero intensity variance over the samples");

  const double denom = std::sqrt(sff * smm);
  const double corr = sfm / denom;
  const Eigen::Index n = t.node_count();
  MetricEval e;
  e.value = -corr;
  e.valid_samples = count;
  e.gradient = Eigen::VectorXd::Zero(t.parameter_count());
  // d corr / d m_i = fc_i / denom - corr * mc_i / smm; the mean terms cancel.
  for (Eigen::Index i = 0; i < count; ++i) {
    const double dm = fc[i] / denom - corr * mc[i] / smm;
    scatter(e.gradient, n, mapped[static_cast<std::size_t>(i)].stencil,
            -dm * gm[static_cast<std::size_t>(i)]);
  }
  require_finite(e, "ncc");
  return e;
}

HandcraftedFeatures::HandcraftedFeatures(std::vector<Channel> channels)
    : channels_(std::move(channels)) {
  if (channels_.empty())
    throw ConfigurationError("features: at least one channel required");
  for (const auto &c : channels_)
    if (!(c.sigma_mm >= 0.0))
      throw ConfigurationError("features: sigma must be non-negative");
}

HandcraftedFeatures HandcraftedFeatures::defaults() {
  return HandcraftedFeatures({{Kind::intensity, 1.0},
                              {Kind::intensity, 4.0},
                              {Kind::gradient_magnitude, 1.0},
                              {Kind::gradient_magnitude, 4.0}});
}

HandcraftedFeatures HandcraftedFeatures::raw_intensity() {
  return HandcraftedFeatures({{Kind::intensity, 0.0}});
}

HandcraftedFeatures HandcraftedFeatures::gradient_only() {
  return HandcraftedFeatures({{Kind::gradient_magnitude, 1.0},
                              {Kind::gradient_magnitude, 4.0}});
}

std::vector<Image2Dd> HandcraftedFeatures::channels(const Image2Dd &img) const {
  std::vector<Image2Dd> out;
  out.reserve(channels_.size());
  for (const auto &c : channels_) {
    Image2Dd smooth = c.sigma_mm > 0.0 ? gaussian_smooth(img, c.sigma_mm) : img;
    out.push_back(c.kind == Kind::intensity ? std::move(smooth)
                                            : gradient_magnitude(smooth));
  }
  return out;
}

std::vector<std::string> HandcraftedFeatures::channel_names() const {
  std::vector<std::string> names;
  for (const auto &c : channels_) {
    const std::string base = c.kind == Kind::intensity ? "intensity" : "gradmag";
    names.push_back(base + "_s" + std::to_string(c.sigma_mm));
  }
  return names;
}

FeatureStack compute_features(const Image2Dd &img, const FeatureProvider &provider) {
  FeatureStack stack;
  for (const auto &ch : provider.channels(img)) {
    require_same_geometry(ch.geometry(), img.geometry(), "compute_features");
    stack.channels.emplace_back(ch);
  }
  if (stack.channels.empty())
    throw ConfigurationError("compute_features: provider returned no channels");
  return stack;
}

MetricEval feature_msd(const FeatureStack &fixed, const FeatureStack &moving,
                       const BSplineFFD &t, const MetricSample &s) {
  if (fixed.channels.size() != moving.channels.size() || fixed.channels.empty())
    throw ConfigurationError("feature_msd: channel count mismatch");
  const auto mapped = map_samples(moving.channels.front(), t, s);
  const Eigen::Index n = t.node_count();
  MetricEval e;
  e.gradient = Eigen::VectorXd::Zero(t.parameter_count());
  e.valid_samples = static_cast<Eigen::Index>(mapped.size());
  const double inv = 1.0 / static_cast<double>(mapped.size());
  double sum = 0.0;
  Eigen::Vector2d gm;
  double m = 0.0;
  for (const auto &smp : mapped) {
    Eigen::Vector2d factor = Eigen::Vector2d::Zero();
    for (std::size_t c = 0; c < fixed.channels.size(); ++c) {
      const double f = fixed.channels[c].sample(smp.p);
      moving.channels[c].sample_with_gradient(smp.q, m, gm);
      const double diff = f - m;
      sum += diff * diff;
      factor += (-2.0 * inv * diff) * gm;
    }
    scatter(e.gradient, n, smp.stencil, factor);
  }
  e.value = sum * inv;
  require_finite(e, "feature_msd");
  return e;
}

} // namespace cinetrack
