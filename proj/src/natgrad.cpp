#include "qnvb/natgrad.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qnvb/errors.hpp"

namespace qnvb {

namespace {

constexpr int kMaxRefinementSteps = 6;

struct GramFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

double gram_condition(const Matrix& gram) {
  const Vector eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
          .eigenvalues();
  const double hi = eig.maxCoeff();
  const double lo = eig.minCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(1.0, std::sqrt(hi / lo));
}

GramFactor factor_with_escalation(const Matrix& gram, double jitter) {
  const Index n = gram.rows();
  const Matrix identity = Matrix::Identity(n, n);
  const double scale = gram.trace() / static_cast<double>(n);

  GramFactor f;
  f.jitter = jitter;
  f.llt.compute(gram + jitter * identity);
  if (f.llt.info() == Eigen::Success) return f;

  // A zero Gram matrix (scale 0) has nothing to escalate against.
  for (double level = std::max(1e-12 * scale, 10.0 * jitter);
       level > 0.0 && level <= 1e-6 * scale * (1.0 + 1e-9); level *= 10.0) {
    f.jitter = level;
    f.llt.compute(gram + level * identity);
    if (f.llt.info() == Eigen::Success) return f;
  }
  const double kappa = gram_condition(gram);
  throw IllConditionedError(
      "Cholesky factorization of the Gram matrix failed after jitter "
      "escalation (condition estimate " +
          std::to_string(kappa) + ")",
      kappa);
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::classical:
      return "classical";
    case EstimatorKind::full_readout:
      return "full-readout";
    case EstimatorKind::gauss_southwell:
      return "gauss-southwell";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view text) {
  if (text == "classical") return EstimatorKind::classical;
  if (text == "full-readout") return EstimatorKind::full_readout;
  if (text == "gauss-southwell") return EstimatorKind::gauss_southwell;
  throw ValidationError("unknown estimator '" + std::string(text) + "'");
}

RegressionSystem build_regression(const std::vector<FlowSample>& samples,
                                  const VariationalFamily& family,
                                  const Model& model) {
  if (samples.empty()) throw ValidationError("regression needs at least one sample");
  const Index m = static_cast<Index>(samples.size());
  const Index n = family.num_params();

  RegressionSystem sys{Matrix(m, n + 1), Vector(m)};
  for (Index i = 0; i < m; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    Vector t;
    double h = 0.0;
    try {
      t = family.score(s);
      h = model.log_joint(s.theta) - family.log_density(s);
    } catch (const DomainError& e) {
      throw DomainError("sample " + std::to_string(i) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("sample " + std::to_string(i) + ": " + e.what());
    }
    if (!t.allFinite() || !std::isfinite(h)) {
      throw NumericalError("non-finite score or response at sample " +
                           std::to_string(i));
    }
    sys.design(i, 0) = 1.0;
    sys.design.row(i).tail(n) = t.transpose();
    sys.response[i] = h;
  }
  return sys;
}

MinNormSolution solve_min_norm(const RegressionSystem& system, double jitter) {
  const Matrix& t = system.design;
  const Vector& h = system.response;
  if (t.rows() != h.size() || t.rows() == 0 || t.cols() == 0) {
    throw ValidationError("regression system has inconsistent shape");
  }
  if (!(jitter >= 0.0)) throw ValidationError("jitter must be non-negative");
  if (!t.allFinite() || !h.allFinite()) {
    throw ValidationError("regression system has non-finite entries");
  }

  MinNormSolution out;
  auto& diag = out.diagnostics;
  diag.underdetermined = t.rows() < t.cols();

  if (diag.underdetermined) {
    // g = T^T x with (T T^T + jI) x = h.
    const Matrix gram = t * t.transpose();
    const GramFactor f = factor_with_escalation(gram, jitter);
    diag.condition_number = gram_condition(gram);
    diag.gram_jitter_used = f.jitter;

    Vector x = f.llt.solve(h);
    for (int step = 0; step < kMaxRefinementSteps; ++step) {
      const Vector residual = h - t * (t.transpose() * x) - f.jitter * x;
      const Vector dx = f.llt.solve(residual);
      x += dx;
      diag.refinement_steps = step + 1;
      if (dx.norm() <= 1e-15 * x.norm()) break;
    }
    out.coefficients = t.transpose() * x;
    diag.residual_norm = 0.0;
  } else {
    // (T^T T + jI) g = T^T h.
    const Matrix gram = t.transpose() * t;
    const GramFactor f = factor_with_escalation(gram, jitter);
    diag.condition_number = gram_condition(gram);
    diag.gram_jitter_used = f.jitter;

    Vector g = f.llt.solve(t.transpose() * h);
    for (int step = 0; step < kMaxRefinementSteps; ++step) {
      const Vector residual = t.transpose() * (h - t * g) - f.jitter * g;
      const Vector dg = f.llt.solve(residual);
      g += dg;
      diag.refinement_steps = step + 1;
      if (dg.norm() <= 1e-15 * g.norm()) break;
    }
    out.coefficients = std::move(g);
    diag.residual_norm = (t * out.coefficients - h).norm();
  }

  if (!out.coefficients.allFinite()) {
    throw IllConditionedError("minimum-norm solution is not finite",
                              diag.condition_number);
  }
  return out;
}

NatGradEstimate estimate_natural_gradient(const VariationalFamily& family,
                                          const Model& model, Index samples,
                                          Rng& rng, double jitter) {
  const auto draws = family.sample(rng, samples);
  const RegressionSystem sys = build_regression(draws, family, model);
  MinNormSolution sol = solve_min_norm(sys, jitter);

  NatGradEstimate est;
  est.beta0 = sol.coefficients[0];
  est.lower_bound = sol.diagnostics.underdetermined ? sys.response.mean() : est.beta0;
  est.beta = sol.coefficients.tail(sol.coefficients.size() - 1);
  est.norm = est.beta.norm();
  est.estimator = EstimatorKind::classical;
  est.diagnostics = sol.diagnostics;
  return est;
}

}  // namespace qnvb
