#include "qnvb/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnvb/errors.hpp"

namespace qnvb {

namespace {

void require_unit(const Vector& g) {
  if (g.size() == 0) throw ValidationError("readout needs a non-empty gradient");
  if (!g.allFinite() || std::abs(g.norm() - 1.0) > 1e-10) {
    throw ValidationError("readout input must have unit norm (got " +
                          std::to_string(g.norm()) + ")");
  }
}

}  // namespace

Vector readout_probabilities(const Vector& unit_gradient) {
  require_unit(unit_gradient);
  const Index n = unit_gradient.size();
  const double c = 1.0 / std::sqrt(static_cast<double>(n));
  Vector p(2 * n);
  for (Index i = 0; i < n; ++i) {
    const double plus = unit_gradient[i] + c;
    const double minus = unit_gradient[i] - c;
    p[i] = 0.25 * plus * plus;
    p[n + i] = 0.25 * minus * minus;
  }
  return p;
}

std::vector<std::int64_t> sample_multinomial(std::int64_t n, const Vector& probs,
                                             Rng& rng) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(probs.size()), 0);
  std::int64_t remaining = n;
  double mass = probs.sum();
  for (Index k = 0; k < probs.size() && remaining > 0; ++k) {
    const double pk = std::max(probs[k], 0.0);
    std::int64_t draw;
    if (k + 1 == probs.size() || pk >= mass) {
      draw = remaining;
    } else {
      const double q = std::clamp(pk / mass, 0.0, 1.0);
      draw = std::binomial_distribution<std::int64_t>(remaining, q)(rng);
    }
    counts[static_cast<std::size_t>(k)] = draw;
    remaining -= draw;
    mass -= pk;
  }
  return counts;
}

FullReadout simulate_full_readout(const Vector& unit_gradient,
                                  std::int64_t n_total, Rng& rng) {
  if (n_total < 1) throw ValidationError("n_T must be at least 1");
  const Vector p = readout_probabilities(unit_gradient);
  const Index n = unit_gradient.size();
  const auto counts = sample_multinomial(n_total, p, rng);

  FullReadout out;
  out.counts.n_plus.assign(counts.begin(), counts.begin() + n);
  out.counts.n_minus.assign(counts.begin() + n, counts.end());
  out.counts.n_total = n_total;

  const double scale = std::sqrt(static_cast<double>(n)) / static_cast<double>(n_total);
  out.g_hat.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.g_hat[i] = scale * static_cast<double>(out.counts.n_plus[k] -
                                               out.counts.n_minus[k]);
  }
  return out;
}

double ae_estimate(double amplitude, const AEMode& mode, Rng& rng) {
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) {
    throw ValidationError("amplitude must lie in [0, 1]");
  }
  if (mode.kind == AEMode::Kind::exact) return amplitude;
  if (mode.shots < 1) throw ValidationError("shots mode needs at least one shot");
  const double p = amplitude * amplitude;
  const auto k = std::binomial_distribution<std::int64_t>(mode.shots, p)(rng);
  return std::sqrt(static_cast<double>(k) / static_cast<double>(mode.shots));
}

GaussSouthwellDraw simulate_gauss_southwell(const Vector& unit_gradient,
                                            const AEMode& mode, Rng& rng) {
  require_unit(unit_gradient);
  const Index n = unit_gradient.size();
  const Vector weights = unit_gradient.array().square();
  std::discrete_distribution<Index> pick(weights.data(), weights.data() + n);
  const Index i = pick(rng);

  const double c = 1.0 / std::sqrt(static_cast<double>(n));
  const double gi = unit_gradient[i];
  // Rounding can push |g_i| + c a hair above 2.
  const double a_plus = std::min(1.0, 0.5 * std::abs(gi + c));
  const double a_minus = std::min(1.0, 0.5 * std::abs(gi - c));
  const double est_plus = ae_estimate(a_plus, mode, rng);
  const double est_minus = ae_estimate(a_minus, mode, rng);
  return {i, std::sqrt(static_cast<double>(n)) *
                 (est_plus * est_plus - est_minus * est_minus)};
}

}  // namespace qnvb
