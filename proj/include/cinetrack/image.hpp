#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "cinetrack/errors.hpp"

namespace cinetrack {

/// Physical point in millimetres, ordered (x, y) where x runs along columns
/// and y along rows.
using Point = Eigen::Vector2d;

/// Pixel lattice of a 2D frame. Spacing and origin are stored in (x, y) order,
/// the same order MetaImage uses; origin is the centre of pixel (0, 0).
struct Geometry {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Vector2d spacing = Eigen::Vector2d::Ones();
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();

  Geometry() = default;
  Geometry(Eigen::Index rows_, Eigen::Index cols_,
           Eigen::Vector2d spacing_ = Eigen::Vector2d::Ones(),
           Eigen::Vector2d origin_ = Eigen::Vector2d::Zero())
      : rows(rows_), cols(cols_), spacing(std::move(spacing_)),
        origin(std::move(origin_)) {
    validate();
  }

  void validate() const {
    if (rows <= 0 || cols <= 0)
      throw ConfigurationError("geometry: dimensions must be positive");
    if (!(spacing.x() > 0.0) || !(spacing.y() > 0.0) || !spacing.allFinite())
      throw ConfigurationError("geometry: spacing must be strictly positive");
    if (!origin.allFinite())
      throw ConfigurationError("geometry: origin must be finite");
  }

  Eigen::Index size() const { return rows * cols; }

  Point pixel_center(Eigen::Index row, Eigen::Index col) const {
    return origin + Eigen::Vector2d(static_cast<double>(col) * spacing.x(),
                                    static_cast<double>(row) * spacing.y());
  }

  /// Continuous (col, row) index of a physical point.
  Eigen::Vector2d continuous_index(const Point &p) const {
    return (p - origin).cwiseQuotient(spacing);
  }

  /// Physical rectangle spanned by the pixel centres.
  Point first_center() const { return origin; }
  Point last_center() const { return pixel_center(rows - 1, cols - 1); }

  /// Full field of view (pixel count times spacing) per axis.
  Eigen::Vector2d extent() const {
    return Eigen::Vector2d(static_cast<double>(cols) * spacing.x(),
                           static_cast<double>(rows) * spacing.y());
  }

  bool operator==(const Geometry &o) const {
    return rows == o.rows && cols == o.cols && spacing == o.spacing &&
           origin == o.origin;
  }
};

template <typename Scalar>
using GridArray =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Scalar intensity frame. Immutable after construction; every value finite.
template <typename Scalar> class Image2D {
public:
  using scalar_type = Scalar;
  using Storage = GridArray<Scalar>;

  Image2D() = default;

  explicit Image2D(const Geometry &geometry, Scalar fill = Scalar(0))
      : geometry_(geometry),
        values_(Storage::Constant(geometry.rows, geometry.cols, fill)) {
    geometry_.validate();
    check_finite();
  }

  Image2D(const Geometry &geometry, Storage values)
      : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.rows() != geometry_.rows || values_.cols() != geometry_.cols)
      throw ConfigurationError("image: value grid does not match geometry");
    check_finite();
  }

  /// Fill from a generator f(row, col).
  template <typename Fn>
  static Image2D generate(const Geometry &geometry, Fn &&fn) {
    Storage v(geometry.rows, geometry.cols);
    for (Eigen::Index r = 0; r < geometry.rows; ++r)
      for (Eigen::Index c = 0; c < geometry.cols; ++c)
        v(r, c) = static_cast<Scalar>(fn(r, c));
    return Image2D(geometry, std::move(v));
  }

  const Geometry &geometry() const { return geometry_; }
  Eigen::Index rows() const { return geometry_.rows; }
  Eigen::Index cols() const { return geometry_.cols; }
  const Storage &values() const { return values_; }
  Scalar operator()(Eigen::Index row, Eigen::Index col) const {
    return values_(row, col);
  }

  template <typename Other> Image2D<Other> cast() const {
    return Image2D<Other>(geometry_, values_.template cast<Other>());
  }

  bool operator==(const Image2D &o) const {
    return geometry_ == o.geometry_ && (values_ == o.values_).all();
  }

private:
  void check_finite() const {
    if (!values_.allFinite())
      throw DomainError("image: non-finite intensity");
  }

  Geometry geometry_;
  Storage values_;
};

using Image2Dd = Image2D<double>;
using Image2Df = Image2D<float>;

/// Binary mask sharing the geometry conventions of Image2D.
class Mask2D {
public:
  using Storage = GridArray<std::uint8_t>;

  Mask2D() = default;

  explicit Mask2D(const Geometry &geometry)
      : geometry_(geometry), values_(Storage::Zero(geometry.rows, geometry.cols)) {
    geometry_.validate();
  }

  Mask2D(const Geometry &geometry, Storage values)
      : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.rows() != geometry_.rows || values_.cols() != geometry_.cols)
      throw ConfigurationError("mask: value grid does not match geometry");
    if ((values_ > std::uint8_t{1}).any())
      throw DomainError("mask: values must be 0 or 1");
  }

  template <typename Fn>
  static Mask2D generate(const Geometry &geometry, Fn &&fn) {
    Storage v(geometry.rows, geometry.cols);
    for (Eigen::Index r = 0; r < geometry.rows; ++r)
      for (Eigen::Index c = 0; c < geometry.cols; ++c)
        v(r, c) = fn(r, c) ? 1 : 0;
    return Mask2D(geometry, std::move(v));
  }

  const Geometry &geometry() const { return geometry_; }
  Eigen::Index rows() const { return geometry_.rows; }
  Eigen::Index cols() const { return geometry_.cols; }
  const Storage &values() const { return values_; }
  std::uint8_t operator()(Eigen::Index row, Eigen::Index col) const {
    return values_(row, col);
  }

  Eigen::Index count() const { return values_.template cast<Eigen::Index>().sum(); }
  bool empty() const { return !(values_ != std::uint8_t{0}).any(); }

  bool operator==(const Mask2D &o) const {
    return geometry_ == o.geometry_ && (values_ == o.values_).all();
  }

private:
  Geometry geometry_;
  Storage values_;
};

inline void require_same_geometry(const Geometry &a, const Geometry &b,
                                  const std::string &what) {
  if (!(a == b))
    throw InputError(what + ": geometry mismatch");
}

} // namespace cinetrack
