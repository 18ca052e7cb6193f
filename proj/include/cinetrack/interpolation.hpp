#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>

#include "cinetrack/image.hpp"

namespace cinetrack {

namespace detail {

inline void require_finite(const Point &p) {
  if (!p.allFinite())
    throw DomainError("interpolation: non-finite sample point");
}

template <typename Grid>
double fetch_zero_padded(const Grid &g, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || col < 0 || row >= g.rows() || col >= g.cols())
    return 0.0;
  return static_cast<double>(g(row, col));
}

} // namespace detail

/// Bilinear interpolation at a physical point. Neighbours outside the grid
/// read as zero, so anything a full pixel beyond the border samples to 0.
/// Works for Image2D<Scalar> and Mask2D alike.
template <typename Grid> double sample_linear(const Grid &g, const Point &p) {
  detail::require_finite(p);
  const Eigen::Vector2d idx = g.geometry().continuous_index(p);
  const double fx = std::floor(idx.x());
  const double fy = std::floor(idx.y());
  if (fx < -1.0 || fy < -1.0 || fx > static_cast<double>(g.cols()) ||
      fy > static_cast<double>(g.rows()))
    return 0.0;
  const auto c0 = static_cast<Eigen::Index>(fx);
  const auto r0 = static_cast<Eigen::Index>(fy);
  const double tx = idx.x() - fx;
  const double ty = idx.y() - fy;
  const double v00 = detail::fetch_zero_padded(g, r0, c0);
  const double v01 = detail::fetch_zero_padded(g, r0, c0 + 1);
  const double v10 = detail::fetch_zero_padded(g, r0 + 1, c0);
  const double v11 = detail::fetch_zero_padded(g, r0 + 1, c0 + 1);
  return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v01) +
         ty * ((1.0 - tx) * v10 + tx * v11);
}

/// Uniform cubic B-spline basis at fractional offset u in [0, 1), for the
/// four taps at integer offsets -1, 0, 1, 2 relative to floor(t).
inline std::array<double, 4> cubic_bspline_weights(double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double v = 1.0 - u;
  return {v * v * v / 6.0, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
          (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0, u3 / 6.0};
}

/// Derivative of cubic_bspline_weights with respect to u.
inline std::array<double, 4> cubic_bspline_derivative_weights(double u) {
  const double u2 = u * u;
  const double v = 1.0 - u;
  return {-0.5 * v * v, 1.5 * u2 - 2.0 * u, -1.5 * u2 + u + 0.5, 0.5 * u2};
}

/// Cubic B-spline interpolant of an image.
///
/// Holds the spline coefficients produced by recursive prefiltering (causal
/// plus anti-causal pass, pole sqrt(3) - 2), so the interpolant passes through
/// every sample. Before filtering each line is extended by cubic
/// extrapolation of its end samples; with that extension the interpolant
/// reproduces polynomials of degree <= 3 up to the border.
///
/// The interpolant is defined on the closed rectangle of pixel centres and
/// reads as zero (with zero gradient) outside it.
class CubicInterpolant {
public:
  CubicInterpolant() = default;

  template <typename Scalar>
  explicit CubicInterpolant(const Image2D<Scalar> &img)
      : CubicInterpolant(img.geometry(), img.values().template cast<double>()) {}

  CubicInterpolant(const Geometry &geometry, const GridArray<double> &values);

  const Geometry &geometry() const { return geometry_; }

  bool contains(const Point &p) const {
    const Eigen::Vector2d idx = geometry_.continuous_index(p);
    return idx.x() >= 0.0 && idx.y() >= 0.0 &&
           idx.x() <= static_cast<double>(geometry_.cols - 1) &&
           idx.y() <= static_cast<double>(geometry_.rows - 1);
  }

  double sample(const Point &p) const;
  /// Spatial gradient (d/dx, d/dy) in intensity per mm.
  Eigen::Vector2d gradient(const Point &p) const;
  /// Value and gradient in one pass; returns false (outputs zeroed) outside.
  bool sample_with_gradient(const Point &p, double &value,
                            Eigen::Vector2d &grad) const;

private:
  static constexpr Eigen::Index kPad = 2;

  Geometry geometry_;
  // Coefficients with kPad extra entries on every side.
  GridArray<double> coeffs_;
};

/// Cubic B-spline interpolation at p; zero outside the pixel-centre rectangle.
inline double sample_cubic(const CubicInterpolant &img, const Point &p) {
  detail::require_finite(p);
  return img.sample(p);
}

/// Analytic gradient of the cubic interpolant at p in intensity/mm.
inline Eigen::Vector2d gradient_at(const CubicInterpolant &img, const Point &p) {
  detail::require_finite(p);
  return img.gradient(p);
}

} // namespace cinetrack
