#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "qnvb/errors.hpp"
#include "qnvb/model.hpp"
#include "qnvb/natgrad.hpp"
#include "qnvb/qsim.hpp"
#include "qnvb/varfam.hpp"

namespace qnvb {

struct SampleGrowth {
  enum class Kind { fixed, linear };
  Kind kind = Kind::fixed;
  double rate = 0.0;
};

struct OptimizerConfig {
  double omega = 0.6;
  double alpha0 = 0.1;
  double tau = 100.0;
  double clip_threshold = 1.0;
  Index initial_samples = 1000;
  SampleGrowth growth;
  std::int64_t readout_shots = 500;  // n_T
  EstimatorKind estimator = EstimatorKind::classical;
  AEMode ae_mode;
  Index max_iters = 500;
  /// Consecutive non-improving checks before stopping; 0 disables.
  Index patience = 10;
  Index check_interval = 10;
  Index smoothing_window = 50;
  double jitter = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError.
  void validate() const;

  /// Hash of every field that shapes the trajectory. Excludes max_iters so a
  /// run can be extended from a checkpoint.
  std::uint64_t trajectory_hash() const;
};

struct TraceRecord {
  Index t = 0;
  double lower_bound = 0.0;
  double grad_norm = 0.0;
  std::optional<double> condition_number;
  Index samples = 0;
  double alpha = 0.0;
  double wall_time = 0.0;
};

struct OptimizerState {
  Index t = 0;
  VariationalFamily params;
  Vector momentum;
  std::vector<TraceRecord> trace;
  // Stopping-rule bookkeeping.
  double best_smoothed = -std::numeric_limits<double>::infinity();
  Index stale_checks = 0;
};

/// t = 0, Y_0 = 0.
OptimizerState initial_state(VariationalFamily params);

/// alpha_t = alpha0 * tau / (tau + t).
double learning_rate(const OptimizerConfig& config, Index t);

/// M0, or M0 + floor(rate * t).
Index sample_size(const OptimizerConfig& config, Index t);

Vector clip(const Vector& gradient, double threshold);

/// Turns the classical regression estimate into the configured estimator's
/// output. Readout estimators see only beta / ||beta|| and return it scaled
/// by the clip threshold.
NatGradEstimate apply_estimator(NatGradEstimate classical,
                                const OptimizerConfig& config, Rng& rng);

/// One momentum update: Y <- omega Y + (1 - omega) clip(beta),
/// lambda <- retract(lambda, alpha_t Y).
OptimizerState step(OptimizerState state, const NatGradEstimate& estimate,
                    const OptimizerConfig& config, Index samples = 0,
                    double wall_time = 0.0);

/// Trailing moving average of the lower-bound column.
Vector smooth_lower_bound(const std::vector<TraceRecord>& trace, Index window);

/// Thrown when an iteration fails; carries the state before the failure.
class RunAborted : public NumericalError {
 public:
  RunAborted(const std::string& what, OptimizerState partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const OptimizerState& partial() const { return partial_; }

 private:
  OptimizerState partial_;
};

using IterationCallback = std::function<void(const OptimizerState&, const Rng&)>;

/// Runs from `state` until config.max_iters total iterations or the
/// patience rule fires. `rng` carries on from wherever it is.
OptimizerState run(const OptimizerConfig& config, const Model& model,
                   OptimizerState state, Rng& rng,
                   const IterationCallback& on_iteration = {});

/// Fresh run seeded from config.seed.
OptimizerState run(const OptimizerConfig& config, const Model& model,
                   const VariationalFamily& initial);

}  // namespace qnvb
