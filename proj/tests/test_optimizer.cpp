#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cinetrack/optimizer.hpp"
#include "cinetrack/registration.hpp"
#include "cinetrack/synth.hpp"

using namespace cinetrack;

namespace {

const Rect kDomain{Point(0.0, 0.0), Point(47.0, 35.0)};

// f(mu) = |mu - target|^2
MetricFunction quadratic(const Eigen::VectorXd &target) {
  return [target](const BSplineFFD &t, int) {
    const Eigen::VectorXd d = t.coefficients() - target;
    return MetricEval{d.squaredNorm(), 2.0 * d, 0};
  };
}

OptimizerConfig single(int iterations) {
  OptimizerConfig c;
  c.iterations_per_level = iterations;
  c.levels = 1;
  return c;
}

std::vector<double> smooth(const OptimizationTrace &tr, int window) {
  std::vector<double> out;
  for (std::size_t i = 0; i + window <= tr.records.size(); i += window) {
    double s = 0.0;
    for (int k = 0; k < window; ++k)
      s += tr.records[i + k].value;
    out.push_back(s / window);
  }
  return out;
}

} // namespace

TEST_CASE("zero gradient leaves the start point") {
  const auto t0 = BSplineFFD::identity(kDomain, Eigen::Vector2d(12.0, 12.0));
  const auto res = optimize(quadratic(t0.coefficients()), t0, single(30));
  CHECK(res.transform.coefficients() == t0.coefficients());
  CHECK(res.trace.records.size() == 30);
  CHECK(res.trace.records.back().value == 0.0);
}

TEST_CASE("quadratic objective converges") {
  const auto t0 = BSplineFFD::identity(kDomain, Eigen::Vector2d(12.0, 12.0));
  Eigen::VectorXd target(t0.parameter_count());
  for (Eigen::Index i = 0; i < target.size(); ++i)
    target[i] = std::sin(1.7 * static_cast<double>(i)) * 4.0;

  auto cfg = single(200);
  // 2 gamma(0) = 0.5: contraction factor (1 - 2 gamma(k)) per step
  cfg.step_a = 0.25 * std::pow(cfg.step_A, cfg.step_alpha);
  const auto res = optimize(quadratic(target), t0, cfg);
  const double start = target.norm();
  CHECK((res.transform.coefficients() - target).norm() < 0.01 * start);
  CHECK(res.trace.step_a == *cfg.step_a);

  // auto-calibrated gain: the first step moves exactly step_delta_mm
  const auto one = optimize(quadratic(target), t0, single(1));
  const double first = (one.transform.coefficients() - t0.coefficients()).norm();
  CHECK(first == doctest::Approx(1.0 / std::pow(20.0, 0.602)).epsilon(1e-9));
}

TEST_CASE("trace bookkeeping") {
  const auto t0 = BSplineFFD::identity(kDomain, Eigen::Vector2d(12.0, 12.0));
  Eigen::VectorXd target = Eigen::VectorXd::Constant(t0.parameter_count(), 2.0);
  const auto res = optimize(quadratic(target), t0, single(57));
  REQUIRE(res.trace.records.size() == 57);
  for (int k = 0; k < 57; ++k) {
    const auto &r = res.trace.records[k];
    CHECK(r.iteration == k);
    CHECK(r.step == doctest::Approx(res.trace.step_a / std::pow(k + 20.0, 0.602)));
    CHECK(r.ms >= 0.0);
  }
  // monotone after window-10 smoothing on a deterministic objective
  const auto s = smooth(res.trace, 10);
  for (std::size_t i = 1; i < s.size(); ++i)
    CHECK(s[i] <= s[i - 1]);

  auto tol = single(200);
  tol.gradient_tolerance = 1e3;
  CHECK(optimize(quadratic(target), t0, tol).trace.records.size() == 1);
}

TEST_CASE("non-finite objective raises with the partial trace") {
  const auto t0 = BSplineFFD::identity(kDomain, Eigen::Vector2d(12.0, 12.0));
  const Eigen::VectorXd target = Eigen::VectorXd::Ones(t0.parameter_count());
  const auto base = quadratic(target);
  const MetricFunction bad = [&](const BSplineFFD &t, int k) {
    auto e = base(t, k);
    if (k == 5)
      e.value = std::numeric_limits<double>::quiet_NaN();
    return e;
  };
  try {
    optimize(bad, t0, single(20));
    FAIL("expected OptimizationError");
  } catch (const OptimizationError &e) {
    CHECK(e.trace().records.size() == 5);
  }

  const MetricFunction degenerate = [](const BSplineFFD &, int) -> MetricEval {
    throw DegenerateMetricError("no samples");
  };
  CHECK_THROWS_AS(optimize(degenerate, t0, single(3)), OptimizationError);
}

TEST_CASE("config validation") {
  const auto t0 = BSplineFFD::identity(kDomain, Eigen::Vector2d(12.0, 12.0));
  const auto f = quadratic(t0.coefficients());
  auto c = single(0);
  CHECK_THROWS_AS(optimize(f, t0, c), ConfigurationError);
  c = single(5);
  c.step_a = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = single(5);
  c.step_alpha = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = single(5);
  c.step_A = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = single(5);
  c.step_delta_mm = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = single(5);
  c.levels = 0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  CHECK_NOTHROW(single(5).validate());
}

TEST_CASE("stochastic msd trace on a 5 mm translation") {
  // default quality schedule; trace runs from the first coarse iteration to
  // the last fine one
  std::vector<double> drops;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PhantomSpec spec;
    spec.rows = spec.cols = 96;
    spec.tumor.center = Point(47.5, 47.5);
    spec.motion.amplitude_mm = 5.0;
    spec.motion.period_frames = 4.0; // frame 1 sits at the full amplitude
    spec.n_frames = 2;
    spec.seed = seed;
    const auto ph = generate(spec);
    auto cfg = RegistrationConfig::quality();
    cfg.seed = seed;
    const auto res = register_images(ph.sequence.frames[1], ph.sequence.frames[0], cfg);
    const auto &levels = res.report.levels;
    REQUIRE(levels.size() == 2);
    const double first = levels.front().trace.records.front().value;
    const double last = levels.back().trace.records.back().value;
    drops.push_back(1.0 - last / first);
  }
  std::sort(drops.begin(), drops.end());
  MESSAGE("median relative decrease ", drops[2]);
  CHECK(drops[2] >= 0.9);
}
