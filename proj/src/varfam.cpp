#include "qnvb/varfam.hpp"

#include <cmath>
#include <string>

#include "qnvb/errors.hpp"

namespace qnvb {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLog2 = 0.69314718055994530942;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double standard_normal_log_pdf(const Vector& z) {
  return -0.5 * z.squaredNorm() - 0.5 * static_cast<double>(z.size()) * kLog2Pi;
}

double activate(Activation act, double a) {
  return act == Activation::tanh ? std::tanh(a) : a;
}

// log act'(a); for tanh, log(1 - tanh(a)^2) written to avoid cancellation.
double log_derivative(Activation act, double a) {
  if (act == Activation::identity) return 0.0;
  const double x = std::abs(a);
  return 2.0 * (kLog2 - x - std::log1p(std::exp(-2.0 * x)));
}

// d/da log act'(a).
double log_derivative_slope(Activation act, double z) {
  return act == Activation::tanh ? -2.0 * z : 0.0;
}

// 1 / act'(a) = d act^{-1}(z) / dz.
double inverse_slope(Activation act, double a) {
  if (act == Activation::identity) return 1.0;
  const double c = std::cosh(a);
  return c * c;
}

double inverse_activate(Activation act, double z, Index layer) {
  if (act == Activation::identity) return z;
  if (!(std::abs(z) < 1.0)) {
    throw DomainError("value " + std::to_string(z) +
                      " outside the tanh range at layer " +
                      std::to_string(layer));
  }
  return std::atanh(z);
}

const char* activation_name(Activation act) {
  return act == Activation::tanh ? "tanh" : "identity";
}

Vector draw_standard_normal(Rng& rng, Index d) {
  std::normal_distribution<double> normal;
  Vector z(d);
  for (Index j = 0; j < d; ++j) z[j] = normal(rng);
  return z;
}

}  // namespace

Matrix qr_orthogonal_factor(const Matrix& a) {
  if (!a.allFinite()) {
    throw NumericalError("QR retraction received a non-finite matrix");
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  const Index n = a.cols();
  const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const Vector diag = r.diagonal();
  const double scale = diag.cwiseAbs().maxCoeff();
  if (!(diag.cwiseAbs().minCoeff() > 1e-12 * scale)) {
    throw NumericalError("QR retraction: matrix is numerically rank deficient");
  }
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), n);
  for (Index j = 0; j < n; ++j) {
    if (diag[j] < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

VariationalFamily::VariationalFamily(FamilyParams params)
    : params_(std::move(params)) {
  prepare();
}

VariationalFamily VariationalFamily::gaussian(Index d) {
  if (d < 1) throw ValidationError("Gaussian family needs d >= 1");
  return VariationalFamily(
      GaussianMeanFieldParams{Vector::Zero(d), Vector::Zero(d)});
}

VariationalFamily VariationalFamily::stiefel_flow(Index d, Index layers,
                                                  Activation activation) {
  if (d < 1 || layers < 1) {
    throw ValidationError("flow needs d >= 1 and at least one layer");
  }
  StiefelFlowParams p;
  p.activation = activation;
  for (Index k = 0; k < layers; ++k) {
    p.layers.push_back({Matrix::Identity(d, d), Vector::Zero(d)});
  }
  return VariationalFamily(std::move(p));
}

void VariationalFamily::prepare() {
  std::visit(
      Overloaded{
          [](const GaussianMeanFieldParams& g) {
            if (g.mu.size() != g.log_sigma.size() || g.mu.size() == 0) {
              throw ValidationError("Gaussian mu and log_sigma lengths differ");
            }
            if (!g.mu.allFinite() || !g.log_sigma.allFinite()) {
              throw ValidationError("Gaussian parameters must be finite");
            }
          },
          [this](const StiefelFlowParams& f) {
            if (f.layers.empty()) throw ValidationError("flow has no layers");
            const Index d = f.layers.front().bias.size();
            inverse_weights_.clear();
            log_abs_det_ = 0.0;
            for (const auto& layer : f.layers) {
              if (layer.weight.rows() != d || layer.weight.cols() != d ||
                  layer.bias.size() != d) {
                throw ValidationError("flow layers must be square and share d");
              }
              if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
                throw ValidationError("flow parameters must be finite");
              }
              Eigen::PartialPivLU<Matrix> lu(layer.weight);
              const double det = lu.determinant();
              if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
                throw NumericalError("flow weight matrix is singular");
              }
              log_abs_det_ += std::log(std::abs(det));
              inverse_weights_.push_back(lu.inverse());
            }
          }},
      params_);
}

bool VariationalFamily::is_flow() const {
  return std::holds_alternative<StiefelFlowParams>(params_);
}

Index VariationalFamily::dim() const {
  return std::visit(
      Overloaded{[](const GaussianMeanFieldParams& g) { return g.mu.size(); },
                 [](const StiefelFlowParams& f) {
                   return f.layers.front().bias.size();
                 }},
      params_);
}

Index VariationalFamily::num_params() const {
  const Index d = dim();
  if (const auto* f = std::get_if<StiefelFlowParams>(&params_)) {
    return static_cast<Index>(f->layers.size()) * (d * d + d);
  }
  return 2 * d;
}

std::string VariationalFamily::layout_tag() const {
  const std::string d = std::to_string(dim());
  if (const auto* f = std::get_if<StiefelFlowParams>(&params_)) {
    return "stiefel:K=" + std::to_string(f->layers.size()) + ":d=" + d + ":" +
           activation_name(f->activation);
  }
  return "gaussian:d=" + d;
}

Vector VariationalFamily::flatten() const {
  Vector out(num_params());
  Index pos = 0;
  std::visit(Overloaded{[&](const GaussianMeanFieldParams& g) {
                          out << g.mu, g.log_sigma;
                        },
                        [&](const StiefelFlowParams& f) {
                          for (const auto& layer : f.layers) {
                            const Index dd = layer.weight.size();
                            out.segment(pos, dd) = layer.weight.reshaped();
                            pos += dd;
                            out.segment(pos, layer.bias.size()) = layer.bias;
                            pos += layer.bias.size();
                          }
                        }},
             params_);
  return out;
}

VariationalFamily VariationalFamily::with_parameters(const Vector& lambda) const {
  if (lambda.size() != num_params()) {
    throw ValidationError("parameter vector has length " +
                          std::to_string(lambda.size()) + ", family expects " +
                          std::to_string(num_params()));
  }
  const Index d = dim();
  if (const auto* f = std::get_if<StiefelFlowParams>(&params_)) {
    StiefelFlowParams next = *f;
    Index pos = 0;
    for (auto& layer : next.layers) {
      layer.weight = lambda.segment(pos, d * d).reshaped(d, d);
      pos += d * d;
      layer.bias = lambda.segment(pos, d);
      pos += d;
    }
    return VariationalFamily(std::move(next));
  }
  return VariationalFamily(
      GaussianMeanFieldParams{lambda.head(d), lambda.tail(d)});
}

FlowSample VariationalFamily::forward(const Vector& z0) const {
  if (z0.size() != dim()) throw ValidationError("base draw has wrong length");
  FlowSample s;
  s.z_path.push_back(z0);
  std::visit(
      Overloaded{[&](const GaussianMeanFieldParams& g) {
                   s.theta = g.mu.array() + g.log_sigma.array().exp() * z0.array();
                 },
                 [&](const StiefelFlowParams& f) {
                   Vector z = z0;
                   for (const auto& layer : f.layers) {
                     Vector a = layer.weight * z + layer.bias;
                     z = a.unaryExpr([&](double v) { return activate(f.activation, v); });
                     s.preactivations.push_back(std::move(a));
                     s.z_path.push_back(z);
                   }
                   s.theta = z;
                 }},
      params_);
  return s;
}

FlowSample VariationalFamily::inverse(const Vector& theta) const {
  if (theta.size() != dim()) throw ValidationError("theta has wrong length");
  FlowSample s;
  s.theta = theta;
  std::visit(
      Overloaded{
          [&](const GaussianMeanFieldParams& g) {
            s.z_path.push_back((theta - g.mu).array() / g.log_sigma.array().exp());
          },
          [&](const StiefelFlowParams& f) {
            const Index layers = static_cast<Index>(f.layers.size());
            s.z_path.assign(layers + 1, Vector());
            s.preactivations.assign(layers, Vector());
            s.z_path[layers] = theta;
            for (Index k = layers - 1; k >= 0; --k) {
              const Vector& z = s.z_path[k + 1];
              Vector a(z.size());
              for (Index j = 0; j < z.size(); ++j) {
                a[j] = inverse_activate(f.activation, z[j], k + 1);
              }
              s.z_path[k] = inverse_weights_[k] * (a - f.layers[k].bias);
              s.preactivations[k] = std::move(a);
            }
          }},
      params_);
  return s;
}

std::vector<FlowSample> VariationalFamily::sample(Rng& rng, Index count) const {
  if (count < 1) throw ValidationError("sample count must be at least 1");
  std::vector<FlowSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    out.push_back(forward(draw_standard_normal(rng, dim())));
  }
  return out;
}

double VariationalFamily::log_density(const Vector& theta) const {
  if (!theta.allFinite()) throw ValidationError("theta has a non-finite entry");
  return log_density(inverse(theta));
}

double VariationalFamily::log_density(const FlowSample& sample) const {
  return std::visit(
      Overloaded{[&](const GaussianMeanFieldParams& g) {
                   const Vector z = (sample.theta - g.mu).array() /
                                    g.log_sigma.array().exp();
                   return standard_normal_log_pdf(z) - g.log_sigma.sum();
                 },
                 [&](const StiefelFlowParams& f) {
                   double total = standard_normal_log_pdf(sample.z_path.front());
                   for (const auto& a : sample.preactivations) {
                     for (Index j = 0; j < a.size(); ++j) {
                       total -= log_derivative(f.activation, a[j]);
                     }
                   }
                   return total - log_abs_det_;
                 }},
      params_);
}

Vector VariationalFamily::score(const FlowSample& sample) const {
  const Index d = dim();
  if (sample.theta.size() != d) throw ValidationError("sample has wrong length");
  Vector out(num_params());
  std::visit(
      Overloaded{
          [&](const GaussianMeanFieldParams& g) {
            const Vector inv_var = (-2.0 * g.log_sigma.array()).exp();
            const Vector r = sample.theta - g.mu;
            out.head(d) = r.cwiseProduct(inv_var);
            out.tail(d) =
                (r.array().square() * inv_var.array() - 1.0).matrix();
          },
          [&](const StiefelFlowParams& f) {
            const Index layers = static_cast<Index>(f.layers.size());
            if (static_cast<Index>(sample.preactivations.size()) != layers ||
                static_cast<Index>(sample.z_path.size()) != layers + 1) {
              throw ValidationError("sample path does not match the flow depth");
            }
            // Reverse pass from Z_0 up through the inverse flow.
            Vector z_bar = -sample.z_path.front();
            const Index block = d * d + d;
            for (Index k = 0; k < layers; ++k) {
              const Matrix inv_t = inverse_weights_[k].transpose();
              const Vector u_bar = inv_t * z_bar;
              Matrix w_bar = -u_bar * sample.z_path[k].transpose() - inv_t;
              out.segment(k * block, d * d) = w_bar.reshaped();
              out.segment(k * block + d * d, d) = -u_bar;
              if (k + 1 < layers) {
                const Vector& a = sample.preactivations[k];
                const Vector& z = sample.z_path[k + 1];
                Vector next(d);
                for (Index j = 0; j < d; ++j) {
                  const double a_bar =
                      u_bar[j] - log_derivative_slope(f.activation, z[j]);
                  next[j] = a_bar * inverse_slope(f.activation, a[j]);
                }
                z_bar = std::move(next);
              }
            }
          }},
      params_);
  return out;
}

VariationalFamily VariationalFamily::retract(const Vector& step) const {
  if (step.size() != num_params()) {
    throw ValidationError("retraction step has length " +
                          std::to_string(step.size()) + ", expected " +
                          std::to_string(num_params()));
  }
  if (!step.allFinite()) throw NumericalError("retraction step is not finite");
  if (const auto* f = std::get_if<StiefelFlowParams>(&params_)) {
    const Index d = dim();
    StiefelFlowParams next = *f;
    Index pos = 0;
    for (auto& layer : next.layers) {
      layer.weight = qr_orthogonal_factor(
          layer.weight + step.segment(pos, d * d).reshaped(d, d));
      pos += d * d;
      layer.bias += step.segment(pos, d);
      pos += d;
    }
    return VariationalFamily(std::move(next));
  }
  return with_parameters(flatten() + step);
}

double VariationalFamily::orthogonality_error() const {
  double worst = 0.0;
  if (const auto* f = std::get_if<StiefelFlowParams>(&params_)) {
    for (const auto& layer : f->layers) {
      const Index d = layer.weight.cols();
      worst = std::max(worst, (layer.weight.transpose() * layer.weight -
                               Matrix::Identity(d, d))
                                  .norm());
    }
  }
  return worst;
}

Vector expected_score_check(const VariationalFamily& family, Rng& rng,
                            Index count) {
  Vector mean = Vector::Zero(family.num_params());
  for (const auto& s : family.sample(rng, count)) mean += family.score(s);
  return mean / static_cast<double>(count);
}

}  // namespace qnvb
