#include <gtest/gtest.h>

#include <cmath>

#include "qnvb/errors.hpp"
#include "qnvb/model.hpp"
#include "support/oracles.hpp"

using namespace qnvb;

namespace {

Dataset single_observation() {
  Dataset d;
  d.features = Matrix::Ones(1, 1);
  d.labels = Vector::Ones(1);
  return d;
}

}  // namespace

TEST(Model, LogisticSingleObservation) {
  const Model m = Model::logistic(single_observation(), 1.0);
  EXPECT_NEAR(m.log_joint(Vector::Zero(1)), std::log(0.5) - 0.5 * std::log(2 * M_PI), 1e-12);
  EXPECT_NEAR(m.log_joint(Vector::Zero(1)), -1.612086, 1e-6);
}

TEST(Model, LogisticEmptyDatasetIsPriorOnly) {
  Dataset d;
  d.features = Matrix::Zero(0, 3);
  d.labels = Vector::Zero(0);
  const Model m = Model::logistic(d, 1.0);
  EXPECT_NEAR(m.log_joint(Vector::Zero(3)), 3 * -0.918939, 3e-6);
}

TEST(Model, RejectsNonBinaryLabelWithRow) {
  Dataset d;
  d.features = Matrix::Ones(3, 1);
  d.labels = Vector::Zero(3);
  d.labels[2] = 2.0;
  try {
    Model::logistic(d, 1.0);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(Model, RejectsNonPositiveVariance) {
  EXPECT_THROW(Model::logistic(single_observation(), 0.0), ValidationError);
  EXPECT_THROW(Model::conjugate_gaussian(Vector::Zero(1), -1.0, 1.0), ValidationError);
  EXPECT_THROW(Model::conjugate_gaussian(Vector::Zero(1), 1.0, 0.0), ValidationError);
}

TEST(Model, LogisticStableForLargeLinearPredictor) {
  Dataset d;
  d.features = Matrix::Ones(2, 1);
  d.labels = Vector::Zero(2);
  d.labels[0] = 1.0;
  const Model m = Model::logistic(d, 1e6);
  for (double theta : {700.0, -700.0}) {
    const double lj = m.log_joint(Vector::Constant(1, theta));
    EXPECT_TRUE(std::isfinite(lj));
    // One observation contributes ~0, the other ~-700.
    EXPECT_NEAR(lj - (-0.5 * theta * theta / 1e6 - 0.5 * std::log(2 * M_PI * 1e6)), -700.0, 1e-9);
  }
}

TEST(Model, LogJointRejectsBadTheta) {
  const Model m = Model::logistic(single_observation(), 1.0);
  EXPECT_THROW(m.log_joint(Vector::Zero(2)), ValidationError);
  EXPECT_THROW(m.log_joint(Vector::Constant(1, std::nan(""))), ValidationError);
}

TEST(Model, ConjugatePosteriors) {
  auto p = Model::conjugate_gaussian(Vector::Zero(1), 1.0, 1.0).exact_posterior();
  EXPECT_DOUBLE_EQ(p.mean, 0.0);
  EXPECT_DOUBLE_EQ(p.variance, 0.5);

  p = Model::conjugate_gaussian(Vector::Zero(0), 1.0, 1.0).exact_posterior();
  EXPECT_DOUBLE_EQ(p.mean, 0.0);
  EXPECT_DOUBLE_EQ(p.variance, 1.0);

  p = Model::conjugate_gaussian(Vector::Constant(2, 2.0), 1.0, 1.0).exact_posterior();
  EXPECT_NEAR(p.mean, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.variance, 1.0 / 3.0, 1e-15);
}

TEST(Model, ConjugateLogJointAtZero) {
  const Model m = Model::conjugate_gaussian(Vector::Zero(1), 1.0, 1.0);
  EXPECT_NEAR(m.log_joint(Vector::Zero(1)), -1.837877, 1e-6);
}

TEST(Model, ConjugateJointMinusPosteriorIsConstant) {
  Vector y(3);
  y << 0.3, -1.2, 2.5;
  const Model m = Model::conjugate_gaussian(y, 0.7, 2.0);
  const auto post = m.exact_posterior();
  std::vector<double> diffs;
  for (double theta : {-1.0, 0.4, 3.0}) {
    diffs.push_back(m.log_joint(Vector::Constant(1, theta)) -
                    log_normal_pdf(theta, post.mean, post.variance));
  }
  EXPECT_NEAR(diffs[0], diffs[1], 1e-10);
  EXPECT_NEAR(diffs[1], diffs[2], 1e-10);
}

TEST(Model, LogEvidenceMatchesMultivariateNormal) {
  oracle::ConjugateToy toy{{0.3, -1.2, 2.5}, 0.7, 2.0};
  const Model m = Model::conjugate_gaussian(Eigen::Map<Vector>(toy.y.data(), 3), 0.7, 2.0);
  EXPECT_NEAR(m.log_evidence(), toy.log_evidence(), 1e-12);
}

TEST(Model, LogJointGradientFiniteByDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Dataset d;
  d.features = Matrix(20, 4);
  d.labels = Vector(20);
  for (Index i = 0; i < 20; ++i) {
    d.features(i, 0) = 1.0;
    for (Index j = 1; j < 4; ++j) d.features(i, j) = normal(rng);
    d.labels[i] = i % 2;
  }
  d.has_intercept = true;
  const Model m = Model::logistic(d, 10.0);
  for (int rep = 0; rep < 5; ++rep) {
    Vector theta(4);
    for (Index j = 0; j < 4; ++j) theta[j] = 50.0 * normal(rng);
    const Vector g = oracle::central_difference([&](const Vector& x) { return m.log_joint(x); },
                                                theta, 1e-5);
    EXPECT_TRUE(g.allFinite());
  }
}
