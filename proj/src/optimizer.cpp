#include "cinetrack/optimizer.hpp"

#include <chrono>
#include <cmath>

namespace cinetrack {

void OptimizerConfig::validate() const {
  if (iterations_per_level < 1)
    throw ConfigurationError("optimizer: iterations_per_level must be >= 1");
  if (levels < 1)
    throw ConfigurationError("optimizer: levels must be >= 1");
  if (step_a && !(*step_a > 0.0))
    throw ConfigurationError("optimizer: step_a must be > 0");
  if (!(step_A >= 1.0))
    throw ConfigurationError("optimizer: step_A must be >= 1");
  if (!(step_alpha > 0.5 && step_alpha <= 1.0))
    throw ConfigurationError("optimizer: step_alpha must lie in (0.5, 1]");
  if (!(step_delta_mm > 0.0))
    throw ConfigurationError("optimizer: step_delta_mm must be > 0");
}

OptimizationResult optimize(const MetricFunction &metric, const BSplineFFD &t0,
                            const OptimizerConfig &cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  OptimizationTrace trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.iterations_per_level));
  Eigen::VectorXd mu = t0.coefficients();
  BSplineFFD current = t0;

  for (int k = 0; k < cfg.iterations_per_level; ++k) {
    const auto start = clock::now();
    MetricEval e;
    try {
      e = metric(current, k);
    } catch (const DegenerateMetricError &err) {
      throw OptimizationError(std::string("optimizer: iteration ") + std::to_string(k) +
                                  ": " + err.what(),
                              std::move(trace));
    }
    if (!std::isfinite(e.value) || !e.gradient.allFinite() ||
        e.gradient.size() != mu.size())
      throw OptimizationError("optimizer: non-finite objective at iteration " +
                                  std::to_string(k),
                              std::move(trace));
    const double gnorm = e.gradient.norm();
    if (k == 0)
      trace.step_a = cfg.step_a ? *cfg.step_a : cfg.step_delta_mm / (gnorm + 1e-12);
    const double gain =
        trace.step_a / std::pow(static_cast<double>(k) + cfg.step_A, cfg.step_alpha);

    IterationRecord rec{k, e.value, gnorm, gain, 0.0};
    if (cfg.gradient_tolerance && gnorm < *cfg.gradient_tolerance) {
      rec.step = 0.0;
      rec.ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
      trace.records.push_back(rec);
      break;
    }
    mu -= gain * e.gradient;
    if (!mu.allFinite())
      throw OptimizationError("optimizer: non-finite parameters at iteration " +
                                  std::to_string(k),
                              std::move(trace));
    current = current.with_coefficients(mu);
    rec.ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    trace.records.push_back(rec);
  }
  return {std::move(current), std::move(trace)};
}

} // namespace cinetrack
