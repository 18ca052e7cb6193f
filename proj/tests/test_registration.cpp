#include "doctest.h"

#include <cmath>
#include <random>

#include "cinetrack/metrics.hpp"
#include "cinetrack/registration.hpp"
#include "cinetrack/synth.hpp"

using namespace cinetrack;

namespace {

Phantom pair_phantom(std::uint64_t seed, double amplitude, Eigen::Index size = 96) {
  PhantomSpec spec;
  spec.rows = spec.cols = size;
  spec.tumor.center = Point(size / 2.0 - 0.5, size / 2.0 - 0.5);
  spec.motion.amplitude_mm = amplitude;
  spec.motion.period_frames = 4.0; // frame 1 at the full amplitude
  spec.n_frames = 2;
  spec.seed = seed;
  return generate(spec);
}

BSplineFFD translated(const BSplineFFD &id, const Eigen::Vector2d &u) {
  Eigen::VectorXd c(id.parameter_count());
  c.head(id.node_count()).setConstant(u.x());
  c.tail(id.node_count()).setConstant(u.y());
  return id.with_coefficients(c);
}

double max_displacement(const BSplineFFD &t, const Geometry &g) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < g.rows; r += 3)
    for (Eigen::Index c = 0; c < g.cols; c += 3) {
      const Point p = g.pixel_center(r, c);
      worst = std::max(worst, (transform_point(t, p) - p).norm());
    }
  return worst;
}

} // namespace

TEST_CASE("profiles") {
  const auto q = RegistrationConfig::quality();
  CHECK(q.control_spacing_mm == 12.0);
  CHECK(q.levels == 2);
  CHECK(q.iterations_per_level == 200);
  CHECK(q.samples_per_iteration == 500);
  CHECK(q.total_work() == 200000u);
  const auto r = RegistrationConfig::realtime();
  CHECK(r.control_spacing_mm == 24.0);
  CHECK(r.levels == 1);
  CHECK(r.iterations_per_level == 50);
  CHECK(r.samples_per_iteration == 250);
  CHECK(q.total_work() >= 5 * r.total_work());
  CHECK(RegistrationConfig::for_profile(Profile::realtime).levels == 1);

  CHECK(parse_profile("realtime") == Profile::realtime);
  CHECK(parse_metric(to_string(MetricKind::feature_msd)) == MetricKind::feature_msd);
  CHECK_THROWS_AS(parse_profile("fast"), ConfigurationError);
  CHECK_THROWS_AS(parse_metric("mi"), ConfigurationError);

  auto bad = q;
  bad.samples_per_iteration = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = q;
  bad.control_spacing_mm = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = q;
  bad.mask_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
}

TEST_CASE("mix_seed") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != mix_seed(0, 1));
}

TEST_CASE("identical pair stays at the identity") {
  const auto ph = pair_phantom(0, 0.0);
  const auto &img = ph.sequence.frames[0];
  const auto res = register_images(img, img, RegistrationConfig::quality());
  CHECK(max_displacement(res.transform, img.geometry()) < 0.1);
  CHECK(res.report.final_value <= res.report.initial_value);
  CHECK_FALSE(res.report.failed);
}

TEST_CASE("5 mm translation is recovered") {
  const auto ph = pair_phantom(1, 5.0);
  const auto &fixed = ph.sequence.frames[1];
  const auto &moving = ph.sequence.frames[0];
  const Point c = Point(47.5, 47.5);
  REQUIRE(ph.gt_displacements[1].y() == doctest::Approx(5.0));

  for (MetricKind m : {MetricKind::msd, MetricKind::ncc, MetricKind::feature_msd}) {
    CAPTURE(to_string(m));
    auto cfg = RegistrationConfig::quality();
    cfg.metric = m;
    const auto res = register_images(fixed, moving, cfg);
    // fixed shows at p the first-frame content at p - d
    const Eigen::Vector2d u = transform_point(res.transform, c) - c;
    CHECK((u + ph.gt_displacements[1]).norm() < 0.5);
    CHECK(res.report.final_value < res.report.initial_value);

    const auto warped = warp_mask(ph.sequence.first_mask, res.transform, fixed.geometry());
    CHECK(centroid_distance(warped, ph.gt_masks[1]) < 0.5);
    CHECK(dsc(warped, ph.gt_masks[1]) > 0.9);
  }
}

TEST_CASE("levels and iterations are recorded") {
  const auto ph = pair_phantom(2, 3.0);
  const auto res = register_images(ph.sequence.frames[1], ph.sequence.frames[0],
                                   RegistrationConfig::quality());
  REQUIRE(res.report.levels.size() == 2);
  CHECK(res.report.levels[0].level == 1); // coarsest first
  CHECK(res.report.levels[1].level == 0);
  CHECK(res.report.levels[0].control_spacing.x() == 24.0);
  CHECK(res.report.levels[1].control_spacing.x() == 12.0);
  for (const auto &l : res.report.levels)
    CHECK(l.trace.records.size() == 200);
  CHECK(res.report.levels[0].fixed_geometry.rows == 48);

  const auto rt = register_images(ph.sequence.frames[1], ph.sequence.frames[0],
                                  RegistrationConfig::realtime());
  REQUIRE(rt.report.levels.size() == 1);
  CHECK(rt.report.levels[0].trace.records.size() == 50);
  CHECK(rt.transform.grid_rows() == 7); // floor(95 / 24) + 4
}

TEST_CASE("determinism and seeds") {
  const auto ph = pair_phantom(3, 4.0);
  auto cfg = RegistrationConfig::realtime();
  cfg.seed = 17;
  const auto a = register_images(ph.sequence.frames[1], ph.sequence.frames[0], cfg);
  const auto b = register_images(ph.sequence.frames[1], ph.sequence.frames[0], cfg);
  CHECK(a.transform.coefficients() == b.transform.coefficients());
  CHECK(a.report.final_value == b.report.final_value);
  cfg.seed = 18;
  const auto c = register_images(ph.sequence.frames[1], ph.sequence.frames[0], cfg);
  CHECK(a.transform.coefficients() != c.transform.coefficients());
}

TEST_CASE("timing accounting") {
  const auto ph = pair_phantom(4, 4.0);
  const auto res = register_images(ph.sequence.frames[1], ph.sequence.frames[0],
                                   RegistrationConfig::quality());
  const auto &r = res.report;
  double parts = r.setup_ms + r.evaluation_ms;
  for (const auto &l : r.levels)
    parts += l.ms;
  CHECK(r.total_ms > 0.0);
  CHECK(std::abs(parts - r.total_ms) <= 0.05 * r.total_ms);
}

TEST_CASE("degenerate input raises with a report") {
  const Geometry g(64, 64);
  const Image2Dd flat(g, 0.5);
  auto cfg = RegistrationConfig::realtime();
  cfg.metric = MetricKind::ncc;
  try {
    register_images(flat, flat, cfg);
    FAIL("expected RegistrationError");
  } catch (const RegistrationError &e) {
    CHECK(e.report().failed);
    CHECK_FALSE(e.report().message.empty());
  }
  const PreparedImage one(flat, RegistrationConfig::realtime());
  CHECK_THROWS_AS(register_images(one, one, RegistrationConfig::quality()), ConfigurationError);
}

TEST_CASE("warp_mask") {
  const Geometry g(40, 50);
  const auto m = Mask2D::generate(g, [](Eigen::Index r, Eigen::Index c) {
    return r >= 10 && r < 20 && c >= 15 && c < 30;
  });
  const auto id = BSplineFFD::identity(Rect::of(g), Eigen::Vector2d(12.0, 12.0));
  CHECK(warp_mask(m, id, g) == m);

  // target p samples the source at p + u: a +2 mm x displacement moves the
  // mask 2 pixels towards -x
  const auto shifted = warp_mask(m, translated(id, Eigen::Vector2d(2.0, 0.0)), g);
  const auto expect = Mask2D::generate(g, [](Eigen::Index r, Eigen::Index c) {
    return r >= 10 && r < 20 && c >= 13 && c < 28;
  });
  CHECK(shifted == expect);

  const auto gone = warp_mask(m, translated(id, Eigen::Vector2d(0.0, 60.0)), g);
  CHECK(gone.empty());

  // generic mapping and the transform overload agree
  const auto t = translated(id, Eigen::Vector2d(-1.3, 0.7));
  const auto generic = warp_mask(
      m, [&](const Point &p) { return try_transform_point(t, p); }, g);
  CHECK(generic == warp_mask(m, t, g));

  CHECK(warp_mask(Mask2D(g), t, g).empty());

  // the displacement-bounded window never changes the result
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd c(id.parameter_count());
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c[k] = 4.0 * n01(rng);
    const auto a = id.with_coefficients(c);
    const auto b = translated(id, Eigen::Vector2d(n01(rng), n01(rng)));
    const PointMapping chain = [&](const Point &p) -> std::optional<Point> {
      const auto q = try_transform_point(b, p);
      return q ? try_transform_point(a, *q) : std::nullopt;
    };
    const auto full = warp_mask(m, chain, g);
    CHECK(warp_mask(m, chain, g, 0.5, displacement_bound(a) + displacement_bound(b)) == full);
    CHECK(warp_mask(m, a, g) ==
          warp_mask(m, [&](const Point &p) { return try_transform_point(a, p); }, g));
  }
}
