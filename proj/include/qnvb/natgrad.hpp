#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "qnvb/model.hpp"
#include "qnvb/types.hpp"
#include "qnvb/varfam.hpp"

namespace qnvb {

/// Rows (1, T(theta_i)^T) and responses h_i = log p(theta_i)L(theta_i) -
/// log q(theta_i).
struct RegressionSystem {
  Matrix design;    // M x (N+1)
  Vector response;  // M

  Index samples() const { return design.rows(); }
  Index num_params() const { return design.cols() - 1; }
};

struct SolveDiagnostics {
  /// sqrt(lambda_max / lambda_min) of the Gram matrix; +inf when singular.
  double condition_number = 1.0;
  double gram_jitter_used = 0.0;
  /// ||T g - h||; exactly 0 is reported for underdetermined systems.
  double residual_norm = 0.0;
  bool underdetermined = false;
  int refinement_steps = 0;
};

struct MinNormSolution {
  Vector coefficients;  // length N+1
  SolveDiagnostics diagnostics;
};

enum class EstimatorKind { classical, full_readout, gauss_southwell };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view text);

struct NatGradEstimate {
  Vector beta;   // natural gradient, length N
  double beta0 = 0.0;  // regression intercept
  /// beta0 when M >= N+1. With fewer samples the minimum-norm intercept is
  /// shrunk towards zero and stops tracking the bound, so the sample mean of
  /// h is reported instead.
  double lower_bound = 0.0;
  double norm = 0.0;   // ||beta||
  EstimatorKind estimator = EstimatorKind::classical;
  std::optional<SolveDiagnostics> diagnostics;
};

RegressionSystem build_regression(const std::vector<FlowSample>& samples,
                                  const VariationalFamily& family,
                                  const Model& model);

/// Minimum-norm least squares g = T^+ h through a Cholesky factorization of
/// the smaller Gram matrix (T T^T when M < N+1, else T^T T), followed by
/// iterative refinement against T itself. Starts at `jitter`; on
/// factorization failure escalates from 1e-12 tr(G)/n by factors of 10 up to
/// 1e-6 tr(G)/n and then throws IllConditionedError.
MinNormSolution solve_min_norm(const RegressionSystem& system, double jitter = 0.0);

/// Samples, regresses, and splits g into (beta0, beta).
NatGradEstimate estimate_natural_gradient(const VariationalFamily& family,
                                          const Model& model, Index samples,
                                          Rng& rng, double jitter = 0.0);

}  // namespace qnvb
