#include <gtest/gtest.h>

#include <cmath>

#include "qnvb/optimizer.hpp"
#include "support/oracles.hpp"

using namespace qnvb;

namespace {

NatGradEstimate fake_estimate(Vector beta, double beta0 = 0.0) {
  NatGradEstimate e;
  e.norm = beta.norm();
  e.beta = std::move(beta);
  e.beta0 = beta0;
  e.lower_bound = beta0;
  return e;
}

Model toy_model(const oracle::ConjugateToy& toy) {
  return Model::conjugate_gaussian(Eigen::Map<const Vector>(toy.y.data(), toy.y.size()),
                                   toy.obs_var, toy.prior_var);
}

Vector toy_optimum(const oracle::ConjugateToy& toy) {
  Vector v(2);
  v << toy.post_mean(), 0.5 * std::log(toy.post_var());
  return v;
}

bool same_trace(const std::vector<TraceRecord>& a, const std::vector<TraceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].lower_bound != b[i].lower_bound ||
        a[i].grad_norm != b[i].grad_norm || a[i].condition_number != b[i].condition_number ||
        a[i].samples != b[i].samples || a[i].alpha != b[i].alpha) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Schedule, LearningRate) {
  OptimizerConfig c;
  EXPECT_DOUBLE_EQ(learning_rate(c, 0), 0.1);
  EXPECT_DOUBLE_EQ(learning_rate(c, 100), 0.05);
  for (Index t = 0; t < 10000; ++t) EXPECT_LE(learning_rate(c, t + 1), learning_rate(c, t));
}

TEST(Schedule, SeriesConditions) {
  OptimizerConfig c;
  double sum = 0.0, sum_sq = 0.0, sum_sq_at_1e5 = 0.0;
  for (Index t = 0; t < 1000000; ++t) {
    const double a = learning_rate(c, t);
    sum += a;
    sum_sq += a * a;
    if (t == 99999) sum_sq_at_1e5 = sum_sq;
  }
  // The partial sum grows like alpha0 * tau * ln(1 + t / tau).
  EXPECT_NEAR(sum, 0.1 * 100.0 * std::log(1e6 / 100.0), 0.2);
  // Squares: bounded by alpha0^2 (1 + tau), tail beyond t bounded by
  // alpha0^2 tau^2 / (tau + t - 1).
  EXPECT_LT(sum_sq, 0.1 * 0.1 * 101.0);
  EXPECT_LT(sum_sq - sum_sq_at_1e5, 0.01 * 1e4 / (100.0 + 99999.0));
}

TEST(Schedule, SampleSize) {
  OptimizerConfig c;
  EXPECT_EQ(sample_size(c, 0), 1000);
  EXPECT_EQ(sample_size(c, 12345), 1000);
  c.initial_samples = 100;
  c.growth = {SampleGrowth::Kind::linear, 0.5};
  EXPECT_EQ(sample_size(c, 0), 100);
  EXPECT_EQ(sample_size(c, 10), 105);
  for (Index t = 0; t < 1000; ++t) EXPECT_LE(sample_size(c, t), sample_size(c, t + 1));
}

TEST(Clip, ScalesLongVectors) {
  Vector g(2);
  g << 6.0, 8.0;
  const Vector out = clip(g, 1.0);
  EXPECT_NEAR(out.norm(), 1.0, 1e-15);
  EXPECT_LE((out - g / 10.0).norm(), 1e-15);
  const Vector small = g / 20.0;
  EXPECT_EQ(clip(small, 1.0), small);
}

TEST(Clip, KeepsLargestComponent) {
  Rng rng(1);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 100; ++rep) {
    Vector g(7);
    for (Index i = 0; i < 7; ++i) g[i] = 5.0 * normal(rng);
    Index before, after;
    g.cwiseAbs().maxCoeff(&before);
    const Vector c = clip(g, 1.0);
    c.cwiseAbs().maxCoeff(&after);
    EXPECT_EQ(before, after);
    EXPECT_LE(c.norm(), 1.0 + 1e-15);
  }
}

TEST(Step, MomentumOffTracksEstimate) {
  OptimizerConfig c;
  c.omega = 1e-12;
  auto s = initial_state(VariationalFamily::gaussian(2));
  Vector g(4);
  g << 0.1, -0.2, 3.0, 0.0;
  s = step(std::move(s), fake_estimate(g), c);
  EXPECT_LE((s.momentum - clip(g, 1.0)).norm(), 1e-11);
  EXPECT_EQ(s.t, 1);
  EXPECT_EQ(s.trace.size(), 1u);
}

TEST(Step, ZeroGradientDecaysMomentum) {
  OptimizerConfig c;
  auto s = initial_state(VariationalFamily::gaussian(1));
  Vector v(2);
  v << 0.4, -0.2;
  s.momentum = v;
  const Vector before = s.params.flatten();
  s = step(std::move(s), fake_estimate(Vector::Zero(2)), c);
  EXPECT_LE((s.momentum - 0.6 * v).norm(), 1e-15);
  EXPECT_LE((s.params.flatten() - before - 0.1 * 0.6 * v).norm(), 1e-15);
}

TEST(Step, StiefelStaysOrthogonal) {
  OptimizerConfig c;
  c.alpha0 = 1.0;
  auto s = initial_state(VariationalFamily::stiefel_flow(3, 2));
  Rng rng(2);
  std::normal_distribution<double> normal;
  for (int it = 0; it < 30; ++it) {
    Vector g(s.params.num_params());
    for (Index i = 0; i < g.size(); ++i) g[i] = normal(rng);
    s = step(std::move(s), fake_estimate(g), c);
    EXPECT_LE(s.params.orthogonality_error(), 1e-12);
  }
}

TEST(Step, RejectsLengthMismatchAndNonFinite) {
  OptimizerConfig c;
  auto s = initial_state(VariationalFamily::gaussian(1));
  EXPECT_THROW(step(s, fake_estimate(Vector::Zero(3)), c), ValidationError);
  Vector bad(2);
  bad << std::nan(""), 0.0;
  try {
    step(s, fake_estimate(bad), c);
    FAIL();
  } catch (const RunAborted& e) {
    EXPECT_EQ(e.partial().t, 0);
  }
}

TEST(Step, MomentumRecursionUnrolls) {
  OptimizerConfig c;
  c.clip_threshold = 1e9;
  auto s = initial_state(VariationalFamily::gaussian(2));
  Rng rng(3);
  std::normal_distribution<double> normal;
  std::vector<Vector> estimates;
  for (int it = 0; it < 40; ++it) {
    Vector g(4);
    for (Index i = 0; i < 4; ++i) g[i] = normal(rng);
    estimates.push_back(g);
    s = step(std::move(s), fake_estimate(g), c);
  }
  Vector closed = Vector::Zero(4);
  const int n = static_cast<int>(estimates.size());
  for (int t = 0; t < n; ++t) closed += (1.0 - c.omega) * std::pow(c.omega, n - 1 - t) * estimates[t];
  EXPECT_LE((s.momentum - closed).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Smoothing, HandExamples) {
  std::vector<TraceRecord> trace(4);
  for (int i = 0; i < 4; ++i) trace[i].lower_bound = i;
  const Vector s = smooth_lower_bound(trace, 2);
  EXPECT_DOUBLE_EQ(s[0], 0.0);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_DOUBLE_EQ(s[2], 1.5);
  EXPECT_DOUBLE_EQ(s[3], 2.5);
  const Vector id = smooth_lower_bound(trace, 1);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(id[i], i);
  for (auto& r : trace) r.lower_bound = -3.25;
  EXPECT_TRUE((smooth_lower_bound(trace, 3).array() == -3.25).all());
  EXPECT_THROW(smooth_lower_bound(trace, 0), ValidationError);
}

TEST(Config, Validation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.omega = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.alpha0 = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.readout_shots = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Config, HashIgnoresIterationBudget) {
  OptimizerConfig a, b;
  b.max_iters = 7;
  EXPECT_EQ(a.trajectory_hash(), b.trajectory_hash());
  b.seed = 1;
  EXPECT_NE(a.trajectory_hash(), b.trajectory_hash());
}

TEST(ApplyEstimator, ReadoutsAreScaledUnitVectors) {
  Vector g(3);
  g << 3.0, 0.0, -4.0;
  OptimizerConfig c;
  c.clip_threshold = 2.0;
  c.estimator = EstimatorKind::gauss_southwell;
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto out = apply_estimator(fake_estimate(g, 1.5), c, rng);
    EXPECT_EQ(out.estimator, EstimatorKind::gauss_southwell);
    EXPECT_EQ(out.beta0, 1.5);
    EXPECT_EQ(out.lower_bound, 1.5);
    EXPECT_EQ((out.beta.array() != 0.0).count(), 1);
    EXPECT_NEAR(out.norm, out.beta.norm(), 1e-15);
    Index i;
    out.beta.cwiseAbs().maxCoeff(&i);
    EXPECT_NEAR(out.beta[i], 2.0 * g[i] / 5.0, 1e-12);
  }
  c.estimator = EstimatorKind::full_readout;
  const auto fr = apply_estimator(fake_estimate(g), c, rng);
  EXPECT_EQ(fr.beta.size(), 3);
  const auto zero = apply_estimator(fake_estimate(Vector::Zero(3)), c, rng);
  EXPECT_EQ(zero.beta, Vector::Zero(3));
}

TEST(Run, ZeroIterationsReturnsInitial) {
  OptimizerConfig c;
  c.max_iters = 0;
  const oracle::ConjugateToy toy{{1.0}, 1.0, 1.0};
  const auto init = VariationalFamily::gaussian(1);
  const auto out = run(c, toy_model(toy), init);
  EXPECT_TRUE(out.trace.empty());
  EXPECT_EQ(out.params.flatten(), init.flatten());
}

TEST(Run, DimensionMismatchRejected) {
  OptimizerConfig c;
  const oracle::ConjugateToy toy{{1.0}, 1.0, 1.0};
  EXPECT_THROW(run(c, toy_model(toy), VariationalFamily::gaussian(2)), ValidationError);
}

TEST(Run, DeterministicReplay) {
  OptimizerConfig c;
  c.max_iters = 40;
  c.initial_samples = 50;
  c.estimator = EstimatorKind::full_readout;
  c.seed = 99;
  const oracle::ConjugateToy toy{{0.5, 2.0}, 1.0, 4.0};
  const auto a = run(c, toy_model(toy), VariationalFamily::gaussian(1));
  const auto b = run(c, toy_model(toy), VariationalFamily::gaussian(1));
  EXPECT_TRUE(same_trace(a.trace, b.trace));
  EXPECT_EQ(a.params.flatten(), b.params.flatten());
  c.seed = 100;
  const auto other = run(c, toy_model(toy), VariationalFamily::gaussian(1));
  EXPECT_FALSE(same_trace(a.trace, other.trace));
}

TEST(Run, PatienceStopsOnFlatLowerBound) {
  OptimizerConfig c;
  c.max_iters = 2000;
  c.initial_samples = 20;
  c.patience = 2;
  const oracle::ConjugateToy toy{{0.0}, 1.0, 1.0};
  const auto out = run(c, toy_model(toy), VariationalFamily::gaussian(1));
  EXPECT_LT(out.t, 2000);
  EXPECT_EQ(out.stale_checks, 2);
}

TEST(Run, ConvergesAcrossCheckpoints) {
  OptimizerConfig c;
  c.initial_samples = 20;
  c.growth = {SampleGrowth::Kind::linear, 1.0};
  c.patience = 0;
  c.max_iters = 500;
  const oracle::ConjugateToy toy{{1.0, 2.5, 0.7}, 0.5, 10.0};
  const Vector target = toy_optimum(toy);
  const VariationalFamily start(
      GaussianMeanFieldParams{Vector::Constant(1, -4.0), Vector::Constant(1, 1.5)});
  double err50 = 0.0, err200 = 0.0, err500 = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    run(c, toy_model(toy), initial_state(start), rng, [&](const OptimizerState& s, const Rng&) {
      const double e = (s.params.flatten() - target).norm();
      if (s.t == 50) err50 += e;
      if (s.t == 200) err200 += e;
      if (s.t == 500) err500 += e;
    });
  }
  EXPECT_GT(err50, err200);
  EXPECT_GT(err200, err500);
  EXPECT_LE(err500 / 10.0, 0.05);
}

TEST(Run, AbortKeepsPartialState) {
  OptimizerConfig c;
  c.max_iters = 5;
  c.initial_samples = 10;
  // Observations large enough that log_joint overflows to -inf everywhere.
  const auto model = Model::conjugate_gaussian(Vector::Constant(1, 1e200), 1e-300, 1.0);
  try {
    run(c, model, VariationalFamily::gaussian(1));
    FAIL() << "expected abort";
  } catch (const RunAborted& e) {
    EXPECT_EQ(e.partial().t, 0);
    EXPECT_TRUE(e.partial().trace.empty());
  }
}
