#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cinetrack/bspline.hpp"
#include "cinetrack/errors.hpp"
#include "cinetrack/similarity.hpp"

namespace cinetrack {

/// Stochastic gradient descent with the decaying gain a / (k + A)^alpha.
struct OptimizerConfig {
  int iterations_per_level = 200;
  int levels = 2;
  /// Gain numerator. Unset means calibrate from the first gradient as
  /// step_delta_mm / (|g_0| + eps).
  std::optional<double> step_a;
  double step_A = 20.0;
  double step_alpha = 0.602;
  /// Calibration displacement, normally one fixed-image pixel spacing.
  double step_delta_mm = 1.0;
  /// Optional early stop when the gradient norm falls below this value.
  std::optional<double> gradient_tolerance;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double ms = 0.0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> records;
  double step_a = 0.0;
};

struct OptimizationResult {
  BSplineFFD transform;
  OptimizationTrace trace;
};

/// Raised when the objective turns non-finite or degenerate mid-run; carries
/// the trace up to the failing iteration.
class OptimizationError : public Error {
public:
  OptimizationError(const std::string &what, OptimizationTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const OptimizationTrace &trace() const { return trace_; }

private:
  OptimizationTrace trace_;
};

/// Objective at transform t for iteration k. Stochastic objectives draw a
/// fresh sample per iteration.
using MetricFunction = std::function<MetricEval(const BSplineFFD &, int)>;

/// Runs exactly cfg.iterations_per_level updates mu <- mu - gamma(k) g_k
/// (fewer only when gradient_tolerance is set and met).
OptimizationResult optimize(const MetricFunction &metric, const BSplineFFD &t0,
                            const OptimizerConfig &cfg);

} // namespace cinetrack
