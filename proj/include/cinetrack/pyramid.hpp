#pragma once

#include <vector>

#include "cinetrack/image.hpp"

namespace cinetrack {

/// Separable Gaussian smoothing with per-axis sigma given in pixels. The kernel
/// is truncated at 3 sigma and renormalised where it overhangs the border, so
/// constant images stay constant.
Image2Dd gaussian_smooth_pixels(const Image2Dd &img, double sigma_x_px,
                                double sigma_y_px);

/// Gaussian smoothing with sigma in millimetres.
Image2Dd gaussian_smooth(const Image2Dd &img, double sigma_mm);

/// Gradient magnitude by central differences (one-sided at the border), in
/// intensity/mm.
Image2Dd gradient_magnitude(const Image2Dd &img);

/// Multi-resolution pyramid, finest first. Each coarser level is smoothed with
/// sigma = 1 fine pixel, then reduced by averaging 2x2 blocks. Spacing doubles
/// and the origin moves to the centre of the first block, so the field of view
/// is preserved up to one dropped odd row or column.
template <typename Scalar>
std::vector<Image2Dd> build_pyramid(const Image2D<Scalar> &img, int levels);

extern template std::vector<Image2Dd> build_pyramid(const Image2D<double> &, int);
extern template std::vector<Image2Dd> build_pyramid(const Image2D<float> &, int);

} // namespace cinetrack
