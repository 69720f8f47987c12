#pragma once

#include <variant>

#include "qnvb/types.hpp"

namespace qnvb {

/// Binary-response design. Labels are stored in {0,1}.
struct Dataset {
  Matrix features;  // n_obs x d
  Vector labels;    // n_obs
  bool has_intercept = false;

  Index n_obs() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  /// Throws ValidationError naming the first offending row.
  void validate() const;
};

struct GaussianPosterior {
  double mean;
  double variance;
};

/// Target density: prior p(theta) times likelihood L(theta). Immutable after
/// construction, so log_joint may be called concurrently.
class Model {
 public:
  enum class Kind { logistic, conjugate_gaussian };

  static Model logistic(Dataset dataset, double prior_variance);
  static Model conjugate_gaussian(Vector observations, double obs_variance,
                                  double prior_variance);

  Kind kind() const;
  Index dim() const;
  double prior_variance() const { return prior_variance_; }

  /// log p(theta) + log L(theta).
  double log_joint(const Vector& theta) const;

  // Conjugate-Gaussian oracles. Throw ValidationError for other kinds.
  GaussianPosterior exact_posterior() const;
  /// log p(y), the marginal likelihood.
  double log_evidence() const;

 private:
  struct Logistic {
    Dataset data;
  };
  struct Conjugate {
    Vector observations;
    double obs_variance;
  };

  Model(std::variant<Logistic, Conjugate> body, double prior_variance)
      : body_(std::move(body)), prior_variance_(prior_variance) {}

  const Conjugate& conjugate() const;

  std::variant<Logistic, Conjugate> body_;
  double prior_variance_;
};

/// log N(x; mean, variance) for scalars.
double log_normal_pdf(double x, double mean, double variance);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace qnvb
