#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cinetrack/image.hpp"
#include "cinetrack/tracker.hpp"

namespace cinetrack {

/// Elliptical tumour with a smooth (tanh) rim of width edge_mm. The mask
/// boundary is the level set where the rim passes half contrast.
struct TumorSpec {
  Point center = Point(127.5, 127.5);
  Eigen::Vector2d semi_axes = Eigen::Vector2d(12.0, 9.0); // mm, along x and y
  double contrast = 1.0;
  double edge_mm = 1.0;
};

struct MotionSpec {
  double amplitude_mm = 8.0;
  double period_frames = 16.0;
  Eigen::Vector2d direction = Eigen::Vector2d(0.0, 1.0); // superior-inferior
  /// Enables a smooth sinusoidal deformation on top of the translation.
  std::optional<std::uint64_t> deformation_seed;
  double deformation_amplitude_mm = 1.5;
};

struct PhantomSpec {
  Eigen::Index rows = 256;
  Eigen::Index cols = 256;
  double spacing_mm = 1.0;
  TumorSpec tumor;
  MotionSpec motion;
  double noise_sigma = 0.02;
  int n_frames = 40;
  double frame_rate_hz = 4.0;
  std::uint64_t seed = 0;
  std::string case_id = "synth";

  Geometry geometry() const {
    return Geometry(rows, cols, Eigen::Vector2d::Constant(spacing_mm));
  }
  void validate() const;
};

struct Phantom {
  CineSequence sequence;
  std::vector<Mask2D> gt_masks;
  /// Global translation d(t) of each frame.
  std::vector<Eigen::Vector2d> gt_displacements;
};

/// Noise-free reference intensity at p: background field plus tumour.
///   background(x, y) = 0.35 + 0.15 (y - y0) / H
///                      + 0.06 cos(2 pi (x / 53 + y / 71) + 0.4)
///                      + 0.05 cos(2 pi (x / 37 - y / 45) + 1.3)
///                      + 0.04 cos(2 pi y / 29 + 2.1)
/// with (x0, y0) the domain centre and H its height, all in mm.
double reference_intensity(const PhantomSpec &spec, const Point &p);

/// True when p lies inside the reference ellipse.
bool reference_inside(const PhantomSpec &spec, const Point &p);

/// Displacement u_t(p): frame t shows at p the reference content at p - u_t(p).
Eigen::Vector2d frame_displacement(const PhantomSpec &spec, int t, const Point &p);

/// d(t) = amplitude sin(2 pi t / period) direction.
Eigen::Vector2d global_translation(const PhantomSpec &spec, int t);

/// Generates frames by analytic evaluation (no resampling), additive Gaussian
/// noise, and ground-truth masks from the inverse-mapped ellipse test.
/// Intensities are rounded to float precision so files round-trip exactly.
Phantom generate(const PhantomSpec &spec);

} // namespace cinetrack
