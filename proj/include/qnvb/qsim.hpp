#pragma once

#include <cstdint>
#include <vector>

#include "qnvb/types.hpp"

namespace qnvb {

/// Outcome counts of the sign-augmented readout: n_plus[i] counts (i,+),
/// n_minus[i] counts (i,-).
struct MeasurementCounts {
  std::vector<std::int64_t> n_plus;
  std::vector<std::int64_t> n_minus;
  std::int64_t n_total = 0;
};

struct FullReadout {
  MeasurementCounts counts;
  Vector g_hat;
};

/// Amplitude-estimation fidelity. `exact` returns the amplitude; `shots`
/// returns sqrt(k/n) with k ~ Binomial(n, a^2).
struct AEMode {
  enum class Kind { exact, shots };
  Kind kind = Kind::exact;
  std::int64_t shots = 0;

  static AEMode exact() { return {}; }
  static AEMode with_shots(std::int64_t n) { return {Kind::shots, n}; }
};

struct GaussSouthwellDraw {
  Index index;   // 0-based coordinate
  double value;  // estimate of g_index
};

/// p(i,+) = (g_i + 1/sqrt(N))^2 / 4 for i < N, then p(i,-) at N + i.
Vector readout_probabilities(const Vector& unit_gradient);

/// Draws n_T outcomes from one multinomial over the 2N readout outcomes and
/// forms g_hat_i = sqrt(N) (n_i^+ - n_i^-) / n_T.
FullReadout simulate_full_readout(const Vector& unit_gradient,
                                  std::int64_t n_total, Rng& rng);

double ae_estimate(double amplitude, const AEMode& mode, Rng& rng);

/// Samples coordinate i with probability g_i^2, then reads g_i from the
/// two sign-branch amplitudes |g_i +- 1/sqrt(N)| / 2.
GaussSouthwellDraw simulate_gauss_southwell(const Vector& unit_gradient,
                                            const AEMode& mode, Rng& rng);

/// Multinomial(n, p) as a chain of conditional binomials.
std::vector<std::int64_t> sample_multinomial(std::int64_t n, const Vector& probs,
                                             Rng& rng);

}  // namespace qnvb
