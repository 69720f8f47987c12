#include "qnvb/optimizer.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

namespace qnvb {

namespace {

void update_stopping(OptimizerState& state, const OptimizerConfig& config) {
  if (config.patience == 0 || state.t % config.check_interval != 0) return;
  const Vector smoothed = smooth_lower_bound(state.trace, config.smoothing_window);
  const double latest = smoothed[smoothed.size() - 1];
  if (latest > state.best_smoothed) {
    state.best_smoothed = latest;
    state.stale_checks = 0;
  } else {
    ++state.stale_checks;
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  if (!(omega > 0.0 && omega < 1.0)) fail("omega must lie in (0, 1)");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) fail("alpha0 must lie in (0, 1]");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (!(clip_threshold > 0.0)) fail("clip threshold must be positive");
  if (initial_samples < 1) fail("initial sample count must be at least 1");
  if (growth.kind == SampleGrowth::Kind::linear && !(growth.rate >= 0.0)) {
    fail("sample growth rate must be non-negative");
  }
  if (readout_shots < 1) fail("n_T must be at least 1");
  if (ae_mode.kind == AEMode::Kind::shots && ae_mode.shots < 1) {
    fail("amplitude-estimation shots must be at least 1");
  }
  if (max_iters < 0) fail("max_iters must be non-negative");
  if (patience < 0) fail("patience must be non-negative");
  if (check_interval < 1) fail("check interval must be at least 1");
  if (smoothing_window < 1) fail("smoothing window must be at least 1");
  if (!(jitter >= 0.0)) fail("jitter must be non-negative");
}

std::uint64_t OptimizerConfig::trajectory_hash() const {
  std::ostringstream os;
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  os << bits(omega) << ' ' << bits(alpha0) << ' ' << bits(tau) << ' '
     << bits(clip_threshold) << ' ' << initial_samples << ' '
     << static_cast<int>(growth.kind) << ' ' << bits(growth.rate) << ' '
     << readout_shots << ' ' << to_string(estimator) << ' '
     << static_cast<int>(ae_mode.kind) << ' ' << ae_mode.shots << ' '
     << patience << ' ' << check_interval << ' ' << smoothing_window << ' '
     << bits(jitter) << ' ' << seed;
  return fnv1a(os.str());
}

OptimizerState initial_state(VariationalFamily params) {
  const Index n = params.num_params();
  return OptimizerState{0, std::move(params), Vector::Zero(n), {}};
}

double learning_rate(const OptimizerConfig& config, Index t) {
  return config.alpha0 * config.tau / (config.tau + static_cast<double>(t));
}

Index sample_size(const OptimizerConfig& config, Index t) {
  if (config.growth.kind == SampleGrowth::Kind::fixed) return config.initial_samples;
  return config.initial_samples +
         static_cast<Index>(std::floor(config.growth.rate * static_cast<double>(t)));
}

Vector clip(const Vector& gradient, double threshold) {
  const double norm = gradient.norm();
  if (norm > threshold) return gradient * (threshold / norm);
  return gradient;
}

NatGradEstimate apply_estimator(NatGradEstimate est, const OptimizerConfig& config,
                                Rng& rng) {
  if (config.estimator == EstimatorKind::classical) return est;
  est.estimator = config.estimator;
  if (!(est.norm > 0.0)) {
    // Nothing to read out; the normalized state is undefined.
    est.beta.setZero();
    return est;
  }
  const Vector unit = est.beta / est.norm;
  if (config.estimator == EstimatorKind::full_readout) {
    est.beta = config.clip_threshold *
               simulate_full_readout(unit, config.readout_shots, rng).g_hat;
  } else {
    const GaussSouthwellDraw draw = simulate_gauss_southwell(unit, config.ae_mode, rng);
    est.beta.setZero();
    est.beta[draw.index] = config.clip_threshold * draw.value;
  }
  est.norm = est.beta.norm();
  return est;
}

OptimizerState step(OptimizerState state, const NatGradEstimate& estimate,
                    const OptimizerConfig& config, Index samples, double wall_time) {
  if (estimate.beta.size() != state.momentum.size()) {
    throw ValidationError("gradient length " + std::to_string(estimate.beta.size()) +
                          " does not match momentum length " +
                          std::to_string(state.momentum.size()));
  }
  const double alpha = learning_rate(config, state.t);
  Vector momentum = config.omega * state.momentum +
                    (1.0 - config.omega) * clip(estimate.beta, config.clip_threshold);
  if (!momentum.allFinite() || !std::isfinite(estimate.lower_bound)) {
    throw RunAborted("non-finite update at iteration " + std::to_string(state.t),
                     std::move(state));
  }

  TraceRecord rec;
  rec.t = state.t;
  rec.lower_bound = estimate.lower_bound;
  rec.grad_norm = estimate.norm;
  if (estimate.diagnostics) rec.condition_number = estimate.diagnostics->condition_number;
  rec.samples = samples;
  rec.alpha = alpha;
  rec.wall_time = wall_time;

  try {
    state.params = state.params.retract(alpha * momentum);
  } catch (const NumericalError& e) {
    throw RunAborted("retraction failed at iteration " + std::to_string(state.t) +
                         ": " + e.what(),
                     std::move(state));
  }
  state.momentum = std::move(momentum);
  state.trace.push_back(rec);
  ++state.t;
  return state;
}

Vector smooth_lower_bound(const std::vector<TraceRecord>& trace, Index window) {
  if (window < 1) throw ValidationError("smoothing window must be at least 1");
  const Index n = static_cast<Index>(trace.size());
  Vector out(n);
  double running = 0.0;
  for (Index i = 0; i < n; ++i) {
    running += trace[static_cast<std::size_t>(i)].lower_bound;
    if (i >= window) running -= trace[static_cast<std::size_t>(i - window)].lower_bound;
    out[i] = running / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

OptimizerState run(const OptimizerConfig& config, const Model& model,
                   OptimizerState state, Rng& rng,
                   const IterationCallback& on_iteration) {
  config.validate();
  if (state.params.dim() != model.dim()) {
    throw ValidationError("family dimension " + std::to_string(state.params.dim()) +
                          " does not match model dimension " +
                          std::to_string(model.dim()));
  }
  using Clock = std::chrono::steady_clock;
  while (state.t < config.max_iters) {
    if (config.patience > 0 && state.stale_checks >= config.patience) break;
    const auto start = Clock::now();
    const Index m = sample_size(config, state.t);
    NatGradEstimate est;
    try {
      est = estimate_natural_gradient(state.params, model, m, rng, config.jitter);
      est = apply_estimator(std::move(est), config, rng);
    } catch (const NumericalError& e) {
      throw RunAborted("iteration " + std::to_string(state.t) +
                           " failed: " + e.what(),
                       std::move(state));
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    state = step(std::move(state), est, config, m, elapsed);
    update_stopping(state, config);
    if (on_iteration) on_iteration(state, rng);
  }
  return state;
}

OptimizerState run(const OptimizerConfig& config, const Model& model,
                   const VariationalFamily& initial) {
  Rng rng(config.seed);
  return run(config, model, initial_state(initial), rng);
}

}  // namespace qnvb
