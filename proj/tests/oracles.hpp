#pragma once

// Independent reference implementations used as test oracles. Everything here
// is written from the metric definitions directly, by exhaustive enumeration.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <Eigen/Core>

#include "cinetrack/image.hpp"

namespace oracle {

using cinetrack::Mask2D;
using cinetrack::Point;

inline double dsc(const Mask2D &a, const Mask2D &b) {
  long na = 0, nb = 0, both = 0;
  for (Eigen::Index r = 0; r < a.geometry().rows; ++r)
    for (Eigen::Index c = 0; c < a.geometry().cols; ++c) {
      na += a(r, c);
      nb += b(r, c);
      both += a(r, c) & b(r, c);
    }
  if (na + nb == 0)
    return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

inline std::vector<Point> boundary(const Mask2D &m) {
  const auto &g = m.geometry();
  std::vector<Point> out;
  for (Eigen::Index r = 0; r < g.rows; ++r)
    for (Eigen::Index c = 0; c < g.cols; ++c) {
      if (!m(r, c))
        continue;
      bool edge = false;
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const Eigen::Index rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || cc < 0 || rr >= g.rows || cc >= g.cols || !m(rr, cc))
          edge = true;
      }
      if (edge)
        out.push_back(g.pixel_center(r, c));
    }
  return out;
}

inline std::vector<double> directed(const std::vector<Point> &from, const std::vector<Point> &to) {
  std::vector<double> d;
  for (const auto &p : from) {
    double best = INFINITY;
    for (const auto &q : to)
      best = std::min(best, (p - q).norm());
    d.push_back(best);
  }
  return d;
}

// numpy.percentile with linear interpolation.
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Distances {
  double hd, hd95, asd;
};

inline Distances surface(const Mask2D &a, const Mask2D &b) {
  const auto ba = boundary(a), bb = boundary(b);
  auto pooled = directed(ba, bb);
  const auto other = directed(bb, ba);
  pooled.insert(pooled.end(), other.begin(), other.end());
  double sum = 0.0;
  for (double x : pooled)
    sum += x;
  return {*std::max_element(pooled.begin(), pooled.end()), percentile(pooled, 95.0),
          sum / static_cast<double>(pooled.size())};
}

inline Point centroid(const Mask2D &m) {
  Point s = Point::Zero();
  long n = 0;
  for (Eigen::Index r = 0; r < m.geometry().rows; ++r)
    for (Eigen::Index c = 0; c < m.geometry().cols; ++c)
      if (m(r, c)) {
        s += m.geometry().pixel_center(r, c);
        ++n;
      }
  return s / static_cast<double>(n);
}

// Random mask with a mix of shapes: empty, single pixel, blobs, full, noise.
inline Mask2D random_mask(const cinetrack::Geometry &g, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = kind(rng);
  Mask2D::Storage s = Mask2D::Storage::Zero(g.rows, g.cols);
  if (k == 0) {
    // empty
  } else if (k == 1) {
    s(static_cast<Eigen::Index>(u(rng) * g.rows), static_cast<Eigen::Index>(u(rng) * g.cols)) = 1;
  } else if (k == 2) {
    s.setOnes();
  } else if (k == 3) {
    const double cx = u(rng) * g.cols, cy = u(rng) * g.rows, rad = 1.0 + u(rng) * 5.0;
    for (Eigen::Index r = 0; r < g.rows; ++r)
      for (Eigen::Index c = 0; c < g.cols; ++c)
        s(r, c) = std::hypot(c - cx, r - cy) <= rad ? 1 : 0;
  } else {
    const double p = k == 4 ? 0.3 : 0.7;
    for (Eigen::Index r = 0; r < g.rows; ++r)
      for (Eigen::Index c = 0; c < g.cols; ++c)
        s(r, c) = u(rng) < p ? 1 : 0;
  }
  return Mask2D(g, std::move(s));
}

/// Central difference of f along unit vector e with step h.
inline double central_difference(const std::function<double(double)> &f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct CommandResult {
  int exit_code;
  std::string output;
};

/// Runs a shell command, capturing stdout and stderr.
inline CommandResult run(const std::string &cmd) {
  const auto tmp = std::filesystem::temp_directory_path() /
                   ("cinetrack_cmd_" + std::to_string(std::random_device{}()) + ".txt");
  const int status = std::system((cmd + " > " + tmp.string() + " 2>&1").c_str());
  std::ifstream in(tmp);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(tmp);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cinetrack_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace oracle
