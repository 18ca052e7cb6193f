#include "cinetrack/interpolation.hpp"

#include <cmath>
#include <vector>

namespace cinetrack {

namespace {

constexpr double kPole = -0.26794919243112270; // sqrt(3) - 2
// Extension length on each side; kPole^kExtension is below double epsilon.
constexpr Eigen::Index kExtension = 32;
constexpr Eigen::Index kHorizon = 30;

// Polynomial extrapolation through the first min(n, 4) samples of a line,
// evaluated at offset -k (k >= 1) before the first sample.
double extrapolate_front(const std::vector<double> &s, std::size_t n, double k) {
  const double x = -k;
  const double d0 = s[0];
  if (n == 1)
    return d0;
  const double d1 = s[1] - s[0];
  if (n == 2)
    return d0 + x * d1;
  const double d2 = s[2] - 2.0 * s[1] + s[0];
  if (n == 3)
    return d0 + x * d1 + x * (x - 1.0) / 2.0 * d2;
  const double d3 = s[3] - 3.0 * s[2] + 3.0 * s[1] - s[0];
  return d0 + x * d1 + x * (x - 1.0) / 2.0 * d2 +
         x * (x - 1.0) * (x - 2.0) / 6.0 * d3;
}

// In-place cubic B-spline prefilter with mirror boundaries.
void prefilter_line(std::vector<double> &c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  const double gain = (1.0 - kPole) * (1.0 - 1.0 / kPole);
  for (double &v : c)
    v *= gain;
  if (n == 1)
    return;

  double sum = c[0];
  if (n > kHorizon) {
    double zk = kPole;
    for (Eigen::Index k = 1; k < kHorizon; ++k) {
      sum += zk * c[k];
      zk *= kPole;
    }
  } else {
    const double zn = std::pow(kPole, static_cast<double>(n - 1));
    double zk = kPole;
    double z2n = zn * zn / kPole;
    sum += zn * c[n - 1];
    for (Eigen::Index k = 1; k < n - 1; ++k) {
      sum += (zk + z2n) * c[k];
      zk *= kPole;
      z2n /= kPole;
    }
    sum /= (1.0 - zn * zn);
  }
  c[0] = sum;
  for (Eigen::Index k = 1; k < n; ++k)
    c[k] += kPole * c[k - 1];

  c[n - 1] = (kPole / (kPole * kPole - 1.0)) * (c[n - 1] + kPole * c[n - 2]);
  for (Eigen::Index k = n - 2; k >= 0; --k)
    c[k] = kPole * (c[k + 1] - c[k]);
}

// Coefficients for one line, returned for original indices [-pad, n-1+pad].
std::vector<double> line_coefficients(const std::vector<double> &s,
                                      Eigen::Index pad) {
  const std::size_t n = s.size();
  std::vector<double> reversed(s.rbegin(), s.rend());
  std::vector<double> ext(n + 2 * kExtension);
  for (Eigen::Index k = 1; k <= kExtension; ++k) {
    ext[kExtension - k] = extrapolate_front(s, n, static_cast<double>(k));
    ext[kExtension + n - 1 + k] =
        extrapolate_front(reversed, n, static_cast<double>(k));
  }
  for (std::size_t i = 0; i < n; ++i)
    ext[kExtension + i] = s[i];
  prefilter_line(ext);
  return std::vector<double>(ext.begin() + (kExtension - pad),
                             ext.begin() + (kExtension + n + pad));
}

} // namespace

CubicInterpolant::CubicInterpolant(const Geometry &geometry,
                                   const GridArray<double> &values)
    : geometry_(geometry) {
  geometry_.validate();
  const Eigen::Index rows = geometry_.rows;
  const Eigen::Index cols = geometry_.cols;
  if (values.rows() != rows || values.cols() != cols)
    throw ConfigurationError("cubic interpolant: value grid does not match geometry");

  GridArray<double> along_x(rows, cols + 2 * kPad);
  std::vector<double> line(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c)
      line[c] = values(r, c);
    const auto coeff = line_coefficients(line, kPad);
    for (Eigen::Index c = 0; c < cols + 2 * kPad; ++c)
      along_x(r, c) = coeff[c];
  }

  coeffs_.resize(rows + 2 * kPad, cols + 2 * kPad);
  line.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index c = 0; c < cols + 2 * kPad; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r)
      line[r] = along_x(r, c);
    const auto coeff = line_coefficients(line, kPad);
    for (Eigen::Index r = 0; r < rows + 2 * kPad; ++r)
      coeffs_(r, c) = coeff[r];
  }
}

bool CubicInterpolant::sample_with_gradient(const Point &p, double &value,
                                            Eigen::Vector2d &grad) const {
  value = 0.0;
  grad.setZero();
  if (!contains(p))
    return false;
  const Eigen::Vector2d idx = geometry_.continuous_index(p);
  const double fx = std::floor(idx.x());
  const double fy = std::floor(idx.y());
  const auto wx = cubic_bspline_weights(idx.x() - fx);
  const auto wy = cubic_bspline_weights(idx.y() - fy);
  const auto dx = cubic_bspline_derivative_weights(idx.x() - fx);
  const auto dy = cubic_bspline_derivative_weights(idx.y() - fy);
  // Padded index of the first tap: (floor - 1) + kPad.
  const auto c0 = static_cast<Eigen::Index>(fx) - 1 + kPad;
  const auto r0 = static_cast<Eigen::Index>(fy) - 1 + kPad;
  double v = 0.0, gx = 0.0, gy = 0.0;
  for (int j = 0; j < 4; ++j) {
    double row_v = 0.0, row_dx = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double c = coeffs_(r0 + j, c0 + i);
      row_v += wx[i] * c;
      row_dx += dx[i] * c;
    }
    v += wy[j] * row_v;
    gx += wy[j] * row_dx;
    gy += dy[j] * row_v;
  }
  value = v;
  grad = Eigen::Vector2d(gx / geometry_.spacing.x(), gy / geometry_.spacing.y());
  return true;
}

double CubicInterpolant::sample(const Point &p) const {
  double v;
  Eigen::Vector2d g;
  sample_with_gradient(p, v, g);
  return v;
}

Eigen::Vector2d CubicInterpolant::gradient(const Point &p) const {
  double v;
  Eigen::Vector2d g;
  sample_with_gradient(p, v, g);
  return g;
}

} // namespace cinetrack
