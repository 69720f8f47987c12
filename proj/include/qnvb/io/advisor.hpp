#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qnvb::io {

/// Regime of a design matrix: N parameters, M samples, condition number
/// kappa. alpha = ln M / ln N and delta = ln kappa / ln N.
struct AdvisorInput {
  double n = 2.0;
  double m = 1.0;
  double kappa = 1.0;
  /// ||T||_F, used only by the quantum-inspired cost.
  double frobenius_norm = 1.0;

  void validate() const;
  double alpha() const;
  double delta() const;
};

/// Columns/rows of the regime table. Exponents <= 0.05 count as zero
/// (polylogarithmic growth).
enum class ExponentBucket { zero, up_to_quarter, up_to_half, below_one };

ExponentBucket bucket_exponent(double exponent);
std::string_view to_string(ExponentBucket bucket);

/// The favoured algorithms for one regime, in table order.
std::vector<std::string> regime_cell(ExponentBucket alpha, ExponentBucket delta);

/// Throws ValidationError if alpha or delta is >= 1.
std::vector<std::string> select_algorithm(const AdvisorInput& input);

struct CostEstimate {
  std::string algorithm;
  std::string formula;
  double operations;
};

inline constexpr std::string_view kAlgorithms[] = {
    "CL", "QI", "HHL", "HHL-FR", "HHL-GS", "WZP", "WZP-FR", "WZP-GS"};

/// Leading-order operation count with polylog factors dropped. "HHL" and
/// "WZP" without a readout scheme report the cheaper of their two readouts.
CostEstimate complexity_estimate(const AdvisorInput& input, std::string_view algorithm,
                                 double epsilon);

}  // namespace qnvb::io
