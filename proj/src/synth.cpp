#include "cinetrack/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cinetrack {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point domain_center(const PhantomSpec &spec) {
  const Geometry g = spec.geometry();
  return 0.5 * (g.first_center() + g.last_center());
}

double normalized_radius(const TumorSpec &t, const Point &p) {
  const Eigen::Vector2d q = (p - t.center).cwiseQuotient(t.semi_axes);
  return q.norm();
}

// Phase in [0, 2 pi) from a splitmix64 step of (seed, salt).
double seeded_phase(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * salt;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return kTwoPi * static_cast<double>(z >> 11) * 0x1.0p-53;
}

} // namespace

void PhantomSpec::validate() const {
  if (rows < 8 || cols < 8)
    throw ConfigurationError("phantom: image must be at least 8x8");
  if (!(spacing_mm > 0.0))
    throw ConfigurationError("phantom: spacing must be > 0");
  if (n_frames < 2)
    throw ConfigurationError("phantom: at least 2 frames required");
  if (!(motion.period_frames >= 4.0))
    throw ConfigurationError("phantom: period must be >= 4 frames");
  if (!(motion.amplitude_mm >= 0.0))
    throw ConfigurationError("phantom: amplitude must be >= 0");
  if (!(motion.direction.norm() > 0.0))
    throw ConfigurationError("phantom: motion direction must be non-zero");
  if (!(tumor.semi_axes.minCoeff() > 0.0) || !(tumor.edge_mm > 0.0))
    throw ConfigurationError("phantom: tumour axes and edge width must be > 0");
  if (!(noise_sigma >= 0.0))
    throw ConfigurationError("phantom: noise sigma must be >= 0");
  if (!(frame_rate_hz >= 1.0 && frame_rate_hz <= 8.0))
    throw ConfigurationError("phantom: frame rate must lie in [1, 8] Hz");

  const Geometry g = geometry();
  const Point lo = g.first_center(), hi = g.last_center();
  const Eigen::Vector2d dir = motion.direction.normalized();
  const double deform = motion.deformation_seed ? motion.deformation_amplitude_mm : 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double reach = motion.amplitude_mm * std::abs(dir[axis]) +
                         tumor.semi_axes[axis] + deform;
    if (tumor.center[axis] - reach <= lo[axis] || tumor.center[axis] + reach >= hi[axis])
      throw ConfigurationError("phantom: tumour leaves the field of view at peak displacement");
  }
}

double reference_intensity(const PhantomSpec &spec, const Point &p) {
  const Point c = domain_center(spec);
  const double height = static_cast<double>(spec.rows) * spec.spacing_mm;
  const double x = p.x(), y = p.y();
  const double background = 0.35 + 0.15 * (y - c.y()) / height +
                            0.06 * std::cos(kTwoPi * (x / 53.0 + y / 71.0) + 0.4) +
                            0.05 * std::cos(kTwoPi * (x / 37.0 - y / 45.0) + 1.3) +
                            0.04 * std::cos(kTwoPi * y / 29.0 + 2.1);
  const TumorSpec &t = spec.tumor;
  const double mean_axis = 0.5 * (t.semi_axes.x() + t.semi_axes.y());
  const double rim = (normalized_radius(t, p) - 1.0) * mean_axis / t.edge_mm;
  return background + t.contrast * 0.5 * (1.0 - std::tanh(rim));
}

bool reference_inside(const PhantomSpec &spec, const Point &p) {
  return normalized_radius(spec.tumor, p) <= 1.0;
}

Eigen::Vector2d global_translation(const PhantomSpec &spec, int t) {
  const double phase = kTwoPi * static_cast<double>(t) / spec.motion.period_frames;
  return spec.motion.amplitude_mm * std::sin(phase) * spec.motion.direction.normalized();
}

Eigen::Vector2d frame_displacement(const PhantomSpec &spec, int t, const Point &p) {
  Eigen::Vector2d u = global_translation(spec, t);
  if (spec.motion.deformation_seed) {
    const double ax = seeded_phase(*spec.motion.deformation_seed, 1);
    const double ay = seeded_phase(*spec.motion.deformation_seed, 2);
    const double s = spec.motion.deformation_amplitude_mm *
                     std::sin(kTwoPi * static_cast<double>(t) / spec.motion.period_frames);
    u += s * Eigen::Vector2d(std::sin(kTwoPi * p.y() / 97.0 + ax),
                             std::sin(kTwoPi * p.x() / 89.0 + ay));
  }
  return u;
}

Phantom generate(const PhantomSpec &spec) {
  spec.validate();
  const Geometry g = spec.geometry();
  Phantom out;
  out.sequence.case_id = spec.case_id;
  out.sequence.frame_rate_hz = spec.frame_rate_hz;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int t = 0; t < spec.n_frames; ++t) {
    GridArray<double> v(g.rows, g.cols);
    Mask2D::Storage m(g.rows, g.cols);
    for (Eigen::Index r = 0; r < g.rows; ++r) {
      for (Eigen::Index c = 0; c < g.cols; ++c) {
        const Point p = g.pixel_center(r, c);
        const Point src = p - frame_displacement(spec, t, p);
        double value = reference_intensity(spec, src);
        if (spec.noise_sigma > 0.0)
          value += spec.noise_sigma * noise(rng);
        v(r, c) = static_cast<double>(static_cast<float>(value));
        m(r, c) = reference_inside(spec, src) ? 1 : 0;
      }
    }
    out.sequence.frames.emplace_back(g, std::move(v));
    out.gt_masks.emplace_back(g, std::move(m));
    out.gt_displacements.push_back(global_translation(spec, t));
  }
  out.sequence.first_mask = out.gt_masks.front();
  return out;
}

} // namespace cinetrack
