#include "qnvb/io/advisor.hpp"

#include <algorithm>
#include <cmath>

#include "qnvb/errors.hpp"

namespace qnvb::io {

namespace {

constexpr double kPolylogThreshold = 0.05;

using Cell = std::vector<std::string>;

// Rows are delta buckets, columns alpha buckets.
const Cell kTable[4][4] = {
    {{"QI"}, {"HHL", "WZP-GS"}, {"HHL", "WZP"}, {"HHL", "WZP"}},
    {{"CL", "HHL-GS"}, {"HHL-GS"}, {"HHL-GS", "WZP-GS"}, {"HHL-GS", "WZP"}},
    {{"CL"}, {"CL", "HHL-GS"}, {"CL", "HHL-GS", "WZP-GS"}, {"WZP-GS"}},
    {{"CL"}, {"CL"}, {"CL"}, {"CL", "WZP-GS"}},
};

}  // namespace

void AdvisorInput::validate() const {
  if (!(n >= 2.0)) throw ValidationError("advisor needs N >= 2");
  if (!(m >= 1.0)) throw ValidationError("advisor needs M >= 1");
  if (!(kappa >= 1.0)) throw ValidationError("advisor needs kappa >= 1");
  if (!(frobenius_norm > 0.0)) throw ValidationError("Frobenius norm must be positive");
}

double AdvisorInput::alpha() const { return std::log(m) / std::log(n); }
double AdvisorInput::delta() const { return std::log(kappa) / std::log(n); }

ExponentBucket bucket_exponent(double e) {
  if (!(e < 1.0)) throw ValidationError("scaling exponent >= 1 is outside the table");
  if (e <= kPolylogThreshold) return ExponentBucket::zero;
  if (e <= 0.25) return ExponentBucket::up_to_quarter;
  if (e <= 0.5) return ExponentBucket::up_to_half;
  return ExponentBucket::below_one;
}

std::string_view to_string(ExponentBucket b) {
  switch (b) {
    case ExponentBucket::zero:
      return "0";
    case ExponentBucket::up_to_quarter:
      return "(0,1/4]";
    case ExponentBucket::up_to_half:
      return "(1/4,1/2]";
    case ExponentBucket::below_one:
      return "(1/2,1)";
  }
  return "?";
}

std::vector<std::string> regime_cell(ExponentBucket alpha, ExponentBucket delta) {
  return kTable[static_cast<int>(delta)][static_cast<int>(alpha)];
}

std::vector<std::string> select_algorithm(const AdvisorInput& input) {
  input.validate();
  return regime_cell(bucket_exponent(input.alpha()), bucket_exponent(input.delta()));
}

CostEstimate complexity_estimate(const AdvisorInput& input, std::string_view algorithm,
                                 double epsilon) {
  input.validate();
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ValidationError("epsilon must lie in (0, 1]");
  }
  const double n = input.n, m = input.m, k2 = input.kappa * input.kappa;
  const double floor_nm = n * m;
  const auto floored = [&](double v) { return std::max(v, floor_nm); };

  if (algorithm == "CL") return {"CL", "N M^2", n * m * m};
  if (algorithm == "QI") {
    return {"QI", "M^6 kappa^16 ||T||_F^6 / eps^6",
            std::pow(m, 6) * std::pow(input.kappa, 16) *
                std::pow(input.frobenius_norm, 6) / std::pow(epsilon, 6)};
  }
  if (algorithm == "HHL-FR") {
    return {"HHL-FR", "max(N M kappa^2 / eps^3, N M)",
            floored(n * m * k2 / std::pow(epsilon, 3))};
  }
  if (algorithm == "HHL-GS") {
    return {"HHL-GS", "max(sqrt(N) M kappa^2 / eps^2, N M)",
            floored(std::sqrt(n) * m * k2 / (epsilon * epsilon))};
  }
  if (algorithm == "WZP-FR") {
    return {"WZP-FR", "max(N^(3/2) kappa^2 / eps^3, N M)",
            floored(std::pow(n, 1.5) * k2 / std::pow(epsilon, 3))};
  }
  if (algorithm == "WZP-GS") {
    return {"WZP-GS", "max(N kappa^2 / eps^2, N M)",
            floored(n * k2 / (epsilon * epsilon))};
  }
  if (algorithm == "HHL" || algorithm == "WZP") {
    const std::string base(algorithm);
    const CostEstimate fr = complexity_estimate(input, base + "-FR", epsilon);
    const CostEstimate gs = complexity_estimate(input, base + "-GS", epsilon);
    const CostEstimate& best = fr.operations <= gs.operations ? fr : gs;
    return {base, "min over readouts: " + best.formula, best.operations};
  }
  throw ValidationError("unknown algorithm '" + std::string(algorithm) + "'");
}

}  // namespace qnvb::io
