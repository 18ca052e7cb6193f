#include "cinetrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

namespace cinetrack {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point since) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - since).count();
}

} // namespace

void CineSequence::validate() const {
  if (frames.size() < 2)
    throw ConfigurationError("sequence: at least 2 frames required");
  const Geometry &g = frames.front().geometry();
  for (const auto &f : frames)
    if (!(f.geometry() == g))
      throw ConfigurationError("sequence: frames do not share one geometry");
  if (!(first_mask.geometry() == g))
    throw ConfigurationError("sequence: first mask geometry differs from the frames");
  if (first_mask.empty())
    throw ConfigurationError("sequence: first mask is empty");
  if (!(frame_rate_hz >= 1.0 && frame_rate_hz <= 8.0))
    throw ConfigurationError("sequence: frame rate must lie in [1, 8] Hz");
}

std::string to_string(Strategy s) {
  switch (s) {
  case Strategy::static_mask:
    return "static";
  case Strategy::register_to_first:
    return "register_to_first";
  case Strategy::register_to_previous:
    return "register_to_previous";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string &s) {
  if (s == "static")
    return Strategy::static_mask;
  if (s == "register_to_first")
    return Strategy::register_to_first;
  if (s == "register_to_previous")
    return Strategy::register_to_previous;
  throw ConfigurationError("unknown strategy '" + s + "'");
}

double percentile(std::vector<double> values, double q) {
  if (values.empty())
    return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

TrackingResult track(const CineSequence &seq, Strategy strategy,
                     const RegistrationConfig &cfg, const TrackOptions &options) {
  const auto start = clock_type::now();
  seq.validate();
  cfg.validate();
  if (options.budget_ms_per_sequence && !(*options.budget_ms_per_sequence > 0.0))
    throw ConfigurationError("track: budget must be > 0");
  if (options.workers < 1)
    throw ConfigurationError("track: workers must be >= 1");

  const std::size_t n = seq.frames.size();
  const Geometry &geom = seq.frames.front().geometry();
  TrackingResult r;
  r.strategy = strategy;
  r.budget_ms = options.budget_ms_per_sequence;
  r.masks.resize(n);
  r.masks[0] = seq.first_mask;
  r.per_frame_ms.assign(n, 0.0);
  r.transforms.resize(n);
  r.reports.resize(n);

  auto frame_config = [&](std::size_t t) {
    RegistrationConfig c = cfg;
    c.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(t));
    return c;
  };

  switch (strategy) {
  case Strategy::static_mask:
    for (std::size_t t = 1; t < n; ++t) {
      const auto fs = clock_type::now();
      r.masks[t] = seq.first_mask;
      r.per_frame_ms[t] = elapsed_ms(fs);
    }
    break;

  case Strategy::register_to_first: {
    const auto ss = clock_type::now();
    const PreparedImage first(seq.frames.front(), cfg);
    r.setup_ms = elapsed_ms(ss);

    // Registration of frame t depends only on frames 0 and t.
    struct FrameOutcome {
      std::optional<Mask2D> mask;
      std::optional<RegistrationResult> reg;
      std::string error;
      double ms = 0.0;
    };
    auto run_frame = [&](std::size_t t) {
      FrameOutcome out;
      const auto fs = clock_type::now();
      try {
        const PreparedImage current(seq.frames[t], cfg);
        auto res = register_images(current, first, frame_config(t));
        out.mask = warp_mask(seq.first_mask, res.transform, geom, cfg.mask_threshold);
        out.reg = std::move(res);
      } catch (const Error &e) {
        out.error = e.what();
      }
      out.ms = elapsed_ms(fs);
      return out;
    };

    std::vector<FrameOutcome> outcomes(n);
    if (options.workers == 1) {
      for (std::size_t t = 1; t < n; ++t)
        outcomes[t] = run_frame(t);
    } else {
      const auto workers = static_cast<std::size_t>(options.workers);
      std::vector<std::future<void>> jobs;
      for (std::size_t w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
          for (std::size_t t = 1 + w; t < n; t += workers)
            outcomes[t] = run_frame(t);
        }));
      for (auto &j : jobs)
        j.get();
    }
    // Fallbacks resolve in frame order so a failed frame inherits its
    // predecessor's final mask.
    for (std::size_t t = 1; t < n; ++t) {
      r.per_frame_ms[t] = outcomes[t].ms;
      if (outcomes[t].mask) {
        r.masks[t] = std::move(*outcomes[t].mask);
        r.transforms[t] = std::move(outcomes[t].reg->transform);
        r.reports[t] = std::move(outcomes[t].reg->report);
      } else {
        r.masks[t] = r.masks[t - 1];
        r.fallback_frames.push_back(static_cast<int>(t));
        r.fallback_messages.push_back(outcomes[t].error);
      }
    }
    break;
  }

  case Strategy::register_to_previous: {
    std::vector<BSplineFFD> chain; // chain[t-1] maps frame t into frame t-1
    const auto ss = clock_type::now();
    std::optional<PreparedImage> previous(std::in_place, seq.frames.front(), cfg);
    r.setup_ms = elapsed_ms(ss);
    for (std::size_t t = 1; t < n; ++t) {
      const auto fs = clock_type::now();
      PreparedImage current(seq.frames[t], cfg);
      bool failed = false;
      try {
        auto res = register_images(current, *previous, frame_config(t));
        r.transforms[t] = res.transform;
        r.reports[t] = std::move(res.report);
        chain.push_back(std::move(res.transform));
      } catch (const Error &e) {
        chain.push_back(BSplineFFD::identity(Rect::of(geom),
                                             Eigen::Vector2d::Constant(cfg.control_spacing_mm)));
        r.fallback_frames.push_back(static_cast<int>(t));
        r.fallback_messages.push_back(e.what());
        failed = true;
      }
      if (failed) {
        r.masks[t] = r.masks[t - 1];
      } else {
        // T_1 o ... o T_t, applied innermost first.
        const PointMapping composed = [&chain](const Point &p) -> std::optional<Point> {
          Point q = p;
          for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            auto next = try_transform_point(*it, q);
            if (!next)
              return std::nullopt;
            q = *next;
          }
          return q;
        };
        Eigen::Vector2d bound = Eigen::Vector2d::Zero();
        for (const auto &link : chain)
          bound += displacement_bound(link);
        r.masks[t] = warp_mask(seq.first_mask, composed, geom, cfg.mask_threshold, bound);
      }
      previous.emplace(std::move(current));
      r.per_frame_ms[t] = elapsed_ms(fs);
    }
    break;
  }
  }

  r.total_ms = elapsed_ms(start);
  if (options.budget_ms_per_sequence) {
    const double per_frame = *options.budget_ms_per_sequence / static_cast<double>(n - 1);
    for (std::size_t t = 1; t < n; ++t)
      if (r.per_frame_ms[t] > per_frame)
        r.budget_violations.push_back(static_cast<int>(t));
  }
  return r;
}

LatencySummary latency_report(const TrackingResult &r, std::optional<double> budget_ms) {
  LatencySummary s;
  std::vector<double> times;
  if (r.per_frame_ms.size() > 1)
    times.assign(r.per_frame_ms.begin() + 1, r.per_frame_ms.end());
  s.frames = times.size();
  s.total_ms = r.total_ms;
  s.budget_ms = budget_ms;
  if (!times.empty()) {
    s.mean_ms = std::accumulate(times.begin(), times.end(), 0.0) /
                static_cast<double>(times.size());
    s.median_ms = percentile(times, 0.5);
    s.p95_ms = percentile(times, 0.95);
    s.max_ms = *std::max_element(times.begin(), times.end());
  }
  s.effective_rate_hz = s.p95_ms > 0.0 ? 1000.0 / s.p95_ms
                                       : std::numeric_limits<double>::infinity();
  s.within_budget = !budget_ms || s.total_ms < *budget_ms;
  return s;
}

} // namespace cinetrack
