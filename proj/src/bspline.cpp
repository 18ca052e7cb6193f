#include "cinetrack/bspline.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cinetrack/interpolation.hpp"

namespace cinetrack {

BSplineFFD BSplineFFD::identity(const Rect &domain,
                                const Eigen::Vector2d &control_spacing) {
  if (!(control_spacing.x() > 0.0) || !(control_spacing.y() > 0.0))
    throw ConfigurationError("bspline: control spacing must be positive");
  const Eigen::Vector2d size = domain.size();
  if (!(size.x() >= 0.0) || !(size.y() >= 0.0))
    throw ConfigurationError("bspline: empty domain");
  const auto cols = static_cast<Eigen::Index>(std::floor(size.x() / control_spacing.x())) + 4;
  const auto rows = static_cast<Eigen::Index>(std::floor(size.y() / control_spacing.y())) + 4;
  return BSplineFFD(domain, control_spacing, rows, cols,
                    Eigen::VectorXd::Zero(2 * rows * cols));
}

BSplineFFD::BSplineFFD(const Rect &domain, const Eigen::Vector2d &control_spacing,
                       Eigen::Index grid_rows, Eigen::Index grid_cols,
                       Eigen::VectorXd coefficients)
    : domain_(domain), spacing_(control_spacing), rows_(grid_rows),
      cols_(grid_cols), coeffs_(std::move(coefficients)) {
  if (!(spacing_.x() > 0.0) || !(spacing_.y() > 0.0))
    throw ConfigurationError("bspline: control spacing must be positive");
  if (rows_ < 4 || cols_ < 4)
    throw ConfigurationError("bspline: control grid needs at least 4x4 nodes");
  const Eigen::Vector2d size = domain_.size();
  if (static_cast<double>(cols_ - 3) * spacing_.x() < size.x() ||
      static_cast<double>(rows_ - 3) * spacing_.y() < size.y())
    throw ConfigurationError("bspline: control grid does not cover the domain");
  if (coeffs_.size() != 2 * rows_ * cols_)
    throw ConfigurationError("bspline: coefficient count must be 2 x nodes");
  if (!coeffs_.allFinite())
    throw DomainError("bspline: non-finite coefficient");
}

BSplineFFD BSplineFFD::with_coefficients(Eigen::VectorXd coefficients) const {
  return BSplineFFD(domain_, spacing_, rows_, cols_, std::move(coefficients));
}

namespace {

// Grid coordinate of p along one axis, and the first-tap index / fraction.
// Returns false when the point lacks a full support.
bool axis_support(double coord, Eigen::Index nodes, Eigen::Index &first,
                  double &frac) {
  if (!(coord >= 1.0) || !(coord <= static_cast<double>(nodes - 2)))
    return false;
  double f = std::floor(coord);
  // The upper edge evaluates with u = 1 on the last full interval.
  if (f > static_cast<double>(nodes - 3))
    f = static_cast<double>(nodes - 3);
  first = static_cast<Eigen::Index>(f) - 1;
  frac = coord - f;
  return true;
}

} // namespace

bool BSplineFFD::covers(const Point &p) const {
  if (!p.allFinite())
    return false;
  const Eigen::Vector2d g = (p - grid_origin()).cwiseQuotient(spacing_);
  return g.x() >= 1.0 && g.y() >= 1.0 &&
         g.x() <= static_cast<double>(cols_ - 2) &&
         g.y() <= static_cast<double>(rows_ - 2);
}

std::optional<Stencil> try_point_jacobian(const BSplineFFD &t, const Point &p) {
  const Eigen::Vector2d g = (p - t.grid_origin()).cwiseQuotient(t.control_spacing());
  Stencil s;
  double ux = 0.0, uy = 0.0;
  if (!axis_support(g.x(), t.grid_cols(), s.first_col, ux) ||
      !axis_support(g.y(), t.grid_rows(), s.first_row, uy))
    return std::nullopt;
  s.grid_cols = t.grid_cols();
  const auto wx = cubic_bspline_weights(ux);
  const auto wy = cubic_bspline_weights(uy);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i)
      s.weights(j, i) = wy[j] * wx[i];
  return s;
}

Stencil point_jacobian(const BSplineFFD &t, const Point &p) {
  auto s = try_point_jacobian(t, p);
  if (!s)
    throw DomainError("bspline: point outside the covered domain");
  return *s;
}

Eigen::Vector2d displacement(const BSplineFFD &t, const Stencil &s) {
  const Eigen::VectorXd &c = t.coefficients();
  const Eigen::Index n = t.node_count();
  double dx = 0.0, dy = 0.0;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      const Eigen::Index k = s.node(j, i);
      dx += s.weights(j, i) * c[k];
      dy += s.weights(j, i) * c[n + k];
    }
  }
  return {dx, dy};
}

std::optional<Point> try_transform_point(const BSplineFFD &t, const Point &p) {
  auto s = try_point_jacobian(t, p);
  if (!s)
    return std::nullopt;
  return Point(p + displacement(t, *s));
}

Point transform_point(const BSplineFFD &t, const Point &p) {
  return p + displacement(t, point_jacobian(t, p));
}

BSplineFFD upsample_to_level(const BSplineFFD &t, const Rect &finer_domain,
                             const Eigen::Vector2d &finer_spacing) {
  const double tol = 1e-6 * std::max(1.0, t.domain().size().maxCoeff());
  if (!finer_domain.approx_equal(t.domain(), tol))
    throw ConfigurationError("upsample_to_level: finer level covers a different domain");

  const BSplineFFD fine = BSplineFFD::identity(finer_domain, finer_spacing);
  const Eigen::Index n = fine.node_count();
  const Eigen::Index gr = fine.grid_rows(), gc = fine.grid_cols();

  // Lattice over the fine grid's covered region.
  const Point lo = fine.grid_origin() + fine.control_spacing();
  const Eigen::Vector2d span(static_cast<double>(gc - 3) * finer_spacing.x(),
                             static_cast<double>(gr - 3) * finer_spacing.y());
  const Eigen::Vector2d step = finer_spacing / 4.0;
  const auto nx = static_cast<Eigen::Index>(std::floor(span.x() / step.x() + 1e-9)) + 1;
  const auto ny = static_cast<Eigen::Index>(std::floor(span.y() / step.y() + 1e-9)) + 1;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nx * ny * 16));
  std::vector<Eigen::Vector2d> targets;
  targets.reserve(static_cast<std::size_t>(nx * ny));
  Eigen::Index row = 0;
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    for (Eigen::Index ix = 0; ix < nx; ++ix) {
      const Point p = lo + Eigen::Vector2d(static_cast<double>(ix) * step.x(),
                                           static_cast<double>(iy) * step.y());
      const auto coarse = try_point_jacobian(t, p);
      const auto sf = try_point_jacobian(fine, p);
      if (!coarse || !sf)
        continue;
      targets.push_back(displacement(t, *coarse));
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i)
          triplets.emplace_back(row, sf->node(j, i), sf->weights(j, i));
      ++row;
    }
  }
  if (row == 0)
    throw ConfigurationError("upsample_to_level: no overlap between control grids");

  Eigen::SparseMatrix<double> a(row, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::MatrixXd rhs(row, 2);
  for (Eigen::Index k = 0; k < row; ++k)
    rhs.row(k) = targets[static_cast<std::size_t>(k)].transpose();

  // Second-difference operator along both grid axes; its null space contains
  // constant and linear coefficient fields, so translations are unaffected.
  std::vector<Eigen::Triplet<double>> dtrip;
  Eigen::Index drow = 0;
  for (Eigen::Index r = 0; r < gr; ++r)
    for (Eigen::Index c = 1; c + 1 < gc; ++c, ++drow) {
      dtrip.emplace_back(drow, r * gc + c - 1, 1.0);
      dtrip.emplace_back(drow, r * gc + c, -2.0);
      dtrip.emplace_back(drow, r * gc + c + 1, 1.0);
    }
  for (Eigen::Index r = 1; r + 1 < gr; ++r)
    for (Eigen::Index c = 0; c < gc; ++c, ++drow) {
      dtrip.emplace_back(drow, (r - 1) * gc + c, 1.0);
      dtrip.emplace_back(drow, r * gc + c, -2.0);
      dtrip.emplace_back(drow, (r + 1) * gc + c, 1.0);
    }
  Eigen::SparseMatrix<double> d(drow, n);
  d.setFromTriplets(dtrip.begin(), dtrip.end());

  Eigen::SparseMatrix<double> normal = a.transpose() * a;
  const double scale = normal.diagonal().mean();
  normal += (1e-8 * scale) * (d.transpose() * d);
  const Eigen::MatrixXd atb = a.transpose() * rhs;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
  if (solver.info() != Eigen::Success)
    throw ConfigurationError("upsample_to_level: refit system is singular");
  const Eigen::MatrixXd sol = solver.solve(atb);

  Eigen::VectorXd coeffs(2 * n);
  coeffs.head(n) = sol.col(0);
  coeffs.tail(n) = sol.col(1);
  return fine.with_coefficients(std::move(coeffs));
}

double bending_penalty(const BSplineFFD &t, Eigen::VectorXd *gradient) {
  const Eigen::Index gr = t.grid_rows(), gc = t.grid_cols(), n = t.node_count();
  const Eigen::VectorXd &c = t.coefficients();
  const double inv_m = 1.0 / static_cast<double>(n);
  if (gradient)
    gradient->setZero(2 * n);
  double energy = 0.0;
  for (int ch = 0; ch < 2; ++ch) {
    const Eigen::Index off = ch * n;
    auto at = [&](Eigen::Index r, Eigen::Index col) { return off + r * gc + col; };
    auto accumulate = [&](double weight, std::initializer_list<std::pair<Eigen::Index, double>> terms) {
      double res = 0.0;
      for (const auto &[k, w] : terms)
        res += w * c[k];
      energy += weight * res * res * inv_m;
      if (gradient)
        for (const auto &[k, w] : terms)
          (*gradient)[k] += 2.0 * weight * res * w * inv_m;
    };
    for (Eigen::Index r = 0; r < gr; ++r)
      for (Eigen::Index col = 1; col + 1 < gc; ++col)
        accumulate(1.0, {{at(r, col - 1), 1.0}, {at(r, col), -2.0}, {at(r, col + 1), 1.0}});
    for (Eigen::Index r = 1; r + 1 < gr; ++r)
      for (Eigen::Index col = 0; col < gc; ++col)
        accumulate(1.0, {{at(r - 1, col), 1.0}, {at(r, col), -2.0}, {at(r + 1, col), 1.0}});
    for (Eigen::Index r = 0; r + 1 < gr; ++r)
      for (Eigen::Index col = 0; col + 1 < gc; ++col)
        accumulate(2.0, {{at(r, col), 1.0}, {at(r, col + 1), -1.0},
                         {at(r + 1, col), -1.0}, {at(r + 1, col + 1), 1.0}});
  }
  return energy;
}

} // namespace cinetrack
