#include "cinetrack/pyramid.hpp"

#include <cmath>
#include <string>

namespace cinetrack {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  return k;
}

// Convolve along one axis; axis 0 = along columns (x), 1 = along rows (y).
GridArray<double> convolve_axis(const GridArray<double> &in,
                                const std::vector<double> &kernel, int axis) {
  const auto radius = static_cast<Eigen::Index>(kernel.size() / 2);
  const Eigen::Index rows = in.rows(), cols = in.cols();
  GridArray<double> out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0, norm = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) {
        const Eigen::Index rr = axis == 1 ? r + k : r;
        const Eigen::Index cc = axis == 0 ? c + k : c;
        if (rr < 0 || cc < 0 || rr >= rows || cc >= cols)
          continue;
        const double w = kernel[k + radius];
        acc += w * in(rr, cc);
        norm += w;
      }
      out(r, c) = acc / norm;
    }
  }
  return out;
}

} // namespace

Image2Dd gaussian_smooth_pixels(const Image2Dd &img, double sigma_x_px,
                                double sigma_y_px) {
  GridArray<double> v = img.values();
  if (sigma_x_px > 0.0)
    v = convolve_axis(v, gaussian_kernel(sigma_x_px), 0);
  if (sigma_y_px > 0.0)
    v = convolve_axis(v, gaussian_kernel(sigma_y_px), 1);
  return Image2Dd(img.geometry(), std::move(v));
}

Image2Dd gaussian_smooth(const Image2Dd &img, double sigma_mm) {
  if (!(sigma_mm >= 0.0))
    throw ConfigurationError("gaussian_smooth: sigma must be non-negative");
  const auto &sp = img.geometry().spacing;
  return gaussian_smooth_pixels(img, sigma_mm / sp.x(), sigma_mm / sp.y());
}

Image2Dd gradient_magnitude(const Image2Dd &img) {
  const auto &g = img.geometry();
  const auto &v = img.values();
  GridArray<double> out(g.rows, g.cols);
  for (Eigen::Index r = 0; r < g.rows; ++r) {
    for (Eigen::Index c = 0; c < g.cols; ++c) {
      const Eigen::Index c0 = std::max<Eigen::Index>(c - 1, 0);
      const Eigen::Index c1 = std::min<Eigen::Index>(c + 1, g.cols - 1);
      const Eigen::Index r0 = std::max<Eigen::Index>(r - 1, 0);
      const Eigen::Index r1 = std::min<Eigen::Index>(r + 1, g.rows - 1);
      const double gx = c1 > c0 ? (v(r, c1) - v(r, c0)) /
                                      (static_cast<double>(c1 - c0) * g.spacing.x())
                                : 0.0;
      const double gy = r1 > r0 ? (v(r1, c) - v(r0, c)) /
                                      (static_cast<double>(r1 - r0) * g.spacing.y())
                                : 0.0;
      out(r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return Image2Dd(g, std::move(out));
}

template <typename Scalar>
std::vector<Image2Dd> build_pyramid(const Image2D<Scalar> &img, int levels) {
  if (levels < 1)
    throw ConfigurationError("build_pyramid: levels must be >= 1");
  const auto &g0 = img.geometry();
  const Eigen::Index factor = Eigen::Index{1} << (levels - 1);
  if (g0.rows / factor < 8 || g0.cols / factor < 8)
    throw ConfigurationError("build_pyramid: image of " + std::to_string(g0.rows) +
                             "x" + std::to_string(g0.cols) + " too small for " +
                             std::to_string(levels) + " levels");

  std::vector<Image2Dd> pyramid;
  pyramid.push_back(img.template cast<double>());
  for (int l = 1; l < levels; ++l) {
    const Image2Dd smooth = gaussian_smooth_pixels(pyramid.back(), 1.0, 1.0);
    const auto &gf = smooth.geometry();
    Geometry gc(gf.rows / 2, gf.cols / 2, gf.spacing * 2.0,
                gf.origin + 0.5 * gf.spacing);
    GridArray<double> v(gc.rows, gc.cols);
    const auto &sv = smooth.values();
    for (Eigen::Index r = 0; r < gc.rows; ++r)
      for (Eigen::Index c = 0; c < gc.cols; ++c)
        v(r, c) = 0.25 * (sv(2 * r, 2 * c) + sv(2 * r, 2 * c + 1) +
                          sv(2 * r + 1, 2 * c) + sv(2 * r + 1, 2 * c + 1));
    pyramid.emplace_back(gc, std::move(v));
  }
  return pyramid;
}

template std::vector<Image2Dd> build_pyramid(const Image2D<double> &, int);
template std::vector<Image2Dd> build_pyramid(const Image2D<float> &, int);

} // namespace cinetrack
