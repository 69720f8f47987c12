#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qnvb/types.hpp"

namespace qnvb {

enum class Activation { tanh, identity };

/// Mean-field Gaussian with sigma = exp(log_sigma).
struct GaussianMeanFieldParams {
  Vector mu;
  Vector log_sigma;
};

struct FlowLayer {
  Matrix weight;  // d x d, orthogonal on the manifold
  Vector bias;
};

/// K-layer flow Z_k = act(W_k Z_{k-1} + b_k), Z_0 ~ N(0, I).
struct StiefelFlowParams {
  std::vector<FlowLayer> layers;
  Activation activation = Activation::tanh;
};

using FamilyParams = std::variant<GaussianMeanFieldParams, StiefelFlowParams>;

/// One draw theta ~ q. For the flow, z_path holds Z_0..Z_K and
/// preactivations holds a_1..a_K; for the Gaussian, z_path = {Z_0} only.
struct FlowSample {
  Vector theta;
  std::vector<Vector> z_path;
  std::vector<Vector> preactivations;
};

/// A variational family at a fixed parameter value lambda.
///
/// Flat parameter layout (the columns of the regression design):
///   Gaussian: [mu, log_sigma]
///   Flow:     [vec(W_1) column-major, b_1, ..., vec(W_K), b_K]
///
/// The flow density is evaluated with the general invertible-layer formula
/// (W^{-1} and log|det W|), which coincides with the orthogonal shortcut on
/// the manifold and makes score() the exact ambient gradient.
class VariationalFamily {
 public:
  explicit VariationalFamily(FamilyParams params);

  /// mu = 0, log_sigma = 0.
  static VariationalFamily gaussian(Index d);
  /// W_k = I, b_k = 0.
  static VariationalFamily stiefel_flow(Index d, Index layers,
                                        Activation activation = Activation::tanh);

  const FamilyParams& params() const { return params_; }
  bool is_flow() const;
  /// Dimension d of theta.
  Index dim() const;
  /// Length N of lambda.
  Index num_params() const;
  /// Identifies family kind and shape, e.g. "stiefel:K=2:d=21:tanh".
  std::string layout_tag() const;

  Vector flatten() const;
  VariationalFamily with_parameters(const Vector& lambda) const;

  std::vector<FlowSample> sample(Rng& rng, Index count) const;
  /// Pushes a base draw z0 through the family.
  FlowSample forward(const Vector& z0) const;
  /// Recovers the path from theta. Throws DomainError outside the image.
  FlowSample inverse(const Vector& theta) const;

  double log_density(const Vector& theta) const;
  /// Uses the cached path; no inversion.
  double log_density(const FlowSample& sample) const;

  /// grad_lambda log q_lambda(theta) with theta held fixed.
  Vector score(const FlowSample& sample) const;

  /// Gaussian: lambda + step. Flow: b += db, W <- qf(W + dW).
  VariationalFamily retract(const Vector& step) const;

  /// max_k ||W_k^T W_k - I||_F; zero for the Gaussian family.
  double orthogonality_error() const;

 private:
  void prepare();

  FamilyParams params_;
  std::vector<Matrix> inverse_weights_;
  double log_abs_det_ = 0.0;
};

/// Orthogonal factor of the QR decomposition with diag(R) > 0. Throws
/// NumericalError when the input is numerically rank deficient.
Matrix qr_orthogonal_factor(const Matrix& a);

/// Monte Carlo mean of the score over `count` draws.
Vector expected_score_check(const VariationalFamily& family, Rng& rng,
                            Index count);

}  // namespace qnvb
