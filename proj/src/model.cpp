#include "qnvb/model.hpp"

#include <cmath>
#include <string>

#include "qnvb/errors.hpp"

namespace qnvb {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(std::string(name) + " must be positive and finite");
  }
}

double gaussian_prior(const Vector& theta, double prior_variance) {
  return -0.5 * theta.squaredNorm() / prior_variance -
         0.5 * static_cast<double>(theta.size()) *
             (kLog2Pi + std::log(prior_variance));
}

}  // namespace

double log_normal_pdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - 0.5 * r * r / variance;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void Dataset::validate() const {
  if (labels.size() != features.rows()) {
    throw ValidationError("dataset has " + std::to_string(features.rows()) +
                          " feature rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ValidationError("label at row " + std::to_string(i) +
                            " is not 0 or 1");
    }
    if (!features.row(i).allFinite()) {
      throw ValidationError("non-finite feature at row " + std::to_string(i));
    }
    if (has_intercept && (features.cols() == 0 || features(i, 0) != 1.0)) {
      throw ValidationError("intercept column is not 1 at row " +
                            std::to_string(i));
    }
  }
}

Model Model::logistic(Dataset dataset, double prior_variance) {
  require_positive(prior_variance, "prior_variance");
  dataset.validate();
  return Model(Logistic{std::move(dataset)}, prior_variance);
}

Model Model::conjugate_gaussian(Vector observations, double obs_variance,
                                double prior_variance) {
  require_positive(obs_variance, "obs_variance");
  require_positive(prior_variance, "prior_variance");
  if (!observations.allFinite()) {
    throw ValidationError("observations must be finite");
  }
  return Model(Conjugate{std::move(observations), obs_variance},
               prior_variance);
}

Model::Kind Model::kind() const {
  return std::holds_alternative<Logistic>(body_) ? Kind::logistic
                                                 : Kind::conjugate_gaussian;
}

Index Model::dim() const {
  if (const auto* l = std::get_if<Logistic>(&body_)) return l->data.dim();
  return 1;
}

double Model::log_joint(const Vector& theta) const {
  if (theta.size() != dim()) {
    throw ValidationError("theta has length " + std::to_string(theta.size()) +
                          ", model expects " + std::to_string(dim()));
  }
  if (!theta.allFinite()) {
    throw ValidationError("theta has a non-finite entry");
  }

  double total = gaussian_prior(theta, prior_variance_);
  if (const auto* l = std::get_if<Logistic>(&body_)) {
    const Vector eta = l->data.features * theta;
    for (Index i = 0; i < eta.size(); ++i) {
      const double term = l->data.labels[i] * eta[i] - softplus(eta[i]);
      if (!std::isfinite(term)) {
        throw NumericalError("non-finite log-likelihood at observation " +
                             std::to_string(i));
      }
      total += term;
    }
  } else {
    const auto& c = std::get<Conjugate>(body_);
    for (Index i = 0; i < c.observations.size(); ++i) {
      total += log_normal_pdf(c.observations[i], theta[0], c.obs_variance);
    }
  }
  if (!std::isfinite(total)) {
    throw NumericalError("log joint is not finite");
  }
  return total;
}

const Model::Conjugate& Model::conjugate() const {
  const auto* c = std::get_if<Conjugate>(&body_);
  if (c == nullptr) {
    throw ValidationError("closed-form posterior requires a conjugate model");
  }
  return *c;
}

GaussianPosterior Model::exact_posterior() const {
  const auto& c = conjugate();
  const double n = static_cast<double>(c.observations.size());
  const double variance = 1.0 / (1.0 / prior_variance_ + n / c.obs_variance);
  const double mean = variance * c.observations.sum() / c.obs_variance;
  return {mean, variance};
}

double Model::log_evidence() const {
  // p(y) = p(theta) L(theta) / p(theta | y) at any theta; use the mode.
  const GaussianPosterior post = exact_posterior();
  const Vector at_mean = Vector::Constant(1, post.mean);
  return log_joint(at_mean) - log_normal_pdf(post.mean, post.mean, post.variance);
}

}  // namespace qnvb
