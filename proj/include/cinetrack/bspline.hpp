#pragma once

#include <optional>

#include <Eigen/Core>

#include "cinetrack/image.hpp"

namespace cinetrack {

/// Axis-aligned physical rectangle, closed.
struct Rect {
  Point min = Point::Zero();
  Point max = Point::Zero();

  static Rect of(const Geometry &g) { return {g.first_center(), g.last_center()}; }

  bool contains(const Point &p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Eigen::Vector2d size() const { return max - min; }
  bool approx_equal(const Rect &o, double tol) const {
    return (min - o.min).cwiseAbs().maxCoeff() <= tol &&
           (max - o.max).cwiseAbs().maxCoeff() <= tol;
  }
};

/// 4x4 support of a point on the control grid. Both displacement channels
/// share the same weights; weights(j, i) multiplies node
/// (first_row + j, first_col + i).
struct Stencil {
  Eigen::Index first_row = 0;
  Eigen::Index first_col = 0;
  Eigen::Index grid_cols = 0;
  Eigen::Matrix4d weights = Eigen::Matrix4d::Zero();

  Eigen::Index node(int j, int i) const {
    return (first_row + j) * grid_cols + first_col + i;
  }
};

/// Cubic B-spline free-form deformation T(p) = p + sum_k beta(p - x_k) c_k.
///
/// Control nodes sit on a regular lattice anchored one spacing before the
/// domain minimum, with enough nodes that every domain point has a full 4x4
/// support. Coefficients are displacements in mm, stored channel-major:
/// all x components in row-major node order, then all y components.
class BSplineFFD {
public:
  BSplineFFD() = default;

  /// Identity transform covering `domain` with the given control spacing.
  static BSplineFFD identity(const Rect &domain, const Eigen::Vector2d &control_spacing);

  BSplineFFD(const Rect &domain, const Eigen::Vector2d &control_spacing,
             Eigen::Index grid_rows, Eigen::Index grid_cols,
             Eigen::VectorXd coefficients);

  const Rect &domain() const { return domain_; }
  const Eigen::Vector2d &control_spacing() const { return spacing_; }
  Eigen::Index grid_rows() const { return rows_; }
  Eigen::Index grid_cols() const { return cols_; }
  Eigen::Index node_count() const { return rows_ * cols_; }
  Eigen::Index parameter_count() const { return 2 * node_count(); }
  const Eigen::VectorXd &coefficients() const { return coeffs_; }
  Point grid_origin() const { return domain_.min - spacing_; }
  Point node_position(Eigen::Index row, Eigen::Index col) const {
    return grid_origin() + Eigen::Vector2d(static_cast<double>(col) * spacing_.x(),
                                           static_cast<double>(row) * spacing_.y());
  }

  /// Displacement coefficient of one node; channel 0 = x, 1 = y.
  double coefficient(Eigen::Index row, Eigen::Index col, int channel) const {
    return coeffs_[channel * node_count() + row * cols_ + col];
  }

  BSplineFFD with_coefficients(Eigen::VectorXd coefficients) const;

  /// True when p has a complete 4x4 support on the control grid. This region
  /// contains the domain rectangle.
  bool covers(const Point &p) const;

  bool operator==(const BSplineFFD &o) const {
    return spacing_ == o.spacing_ && rows_ == o.rows_ && cols_ == o.cols_ &&
           domain_.min == o.domain_.min && domain_.max == o.domain_.max &&
           coeffs_ == o.coeffs_;
  }

private:
  Rect domain_;
  Eigen::Vector2d spacing_ = Eigen::Vector2d::Ones();
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Eigen::VectorXd coeffs_;
};

/// Support stencil of p. Throws DomainError when p is not covered.
Stencil point_jacobian(const BSplineFFD &t, const Point &p);

/// Stencil without the coverage check; nullopt when p is not covered.
std::optional<Stencil> try_point_jacobian(const BSplineFFD &t, const Point &p);

/// Displacement of p under the stencil, (sum w c_x, sum w c_y).
Eigen::Vector2d displacement(const BSplineFFD &t, const Stencil &s);

/// T(p). Throws DomainError when p is not covered.
Point transform_point(const BSplineFFD &t, const Point &p);

std::optional<Point> try_transform_point(const BSplineFFD &t, const Point &p);

/// Refit `t` onto a control grid with `finer_spacing` over `finer_domain` by
/// least squares against samples of the coarse mapping on a lattice at a
/// quarter of the fine spacing. A small second-difference penalty keeps nodes
/// with little lattice support determined without biasing translations.
BSplineFFD upsample_to_level(const BSplineFFD &t, const Rect &finer_domain,
                             const Eigen::Vector2d &finer_spacing);

/// Discrete bending penalty on the coefficient grid: mean over nodes of
/// squared second differences (xx, yy, and twice xy) per channel, in mm^2.
/// Writes the gradient with respect to the coefficients when asked.
double bending_penalty(const BSplineFFD &t, Eigen::VectorXd *gradient = nullptr);

} // namespace cinetrack
