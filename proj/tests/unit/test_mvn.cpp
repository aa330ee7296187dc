#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "mxmiss/models.hpp"
#include "mxmiss/mvn.hpp"

using namespace mxmiss;

namespace {

MvnModel ar1_model(int p, double rho) {
  return {Eigen::VectorXd::Zero(p), make_ar1_covariance(p, rho)};
}

MvnModel random_model(int p, Rng& rng) {
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = rng.gaussian();
  MvnModel model;
  model.mean = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < p; ++i) model.mean[i] = rng.gaussian();
  model.covariance = a * a.transpose() / p + 0.5 * Eigen::MatrixXd::Identity(p, p);
  return model;
}

}  // namespace

TEST_CASE("gaussian conditioning closed forms") {
  SUBCASE("bivariate textbook case") {
    MvnModel model = ar1_model(2, 0.5);
    const MaskedSample sample({0.0, 1.0}, {true, false});
    const GaussianConditional cond = mvn_condition(model, sample);
    REQUIRE(cond.target == std::vector<int>{0});
    CHECK(cond.mean[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cond.covariance(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  }

  SUBCASE("nothing observed returns the marginal") {
    Rng rng(5);
    MvnModel model = random_model(3, rng);
    const MaskedSample sample({0, 0, 0}, {true, true, true});
    const GaussianConditional cond = mvn_condition(model, sample);
    CHECK(cond.mean.isApprox(model.mean));
    CHECK(cond.covariance.isApprox(model.covariance));
  }

  SUBCASE("grid oracle for the middle coordinate of an AR(1) triple") {
    MvnModel model = ar1_model(3, 0.5);
    const MaskedSample sample({1.0, 0.0, -1.0}, {false, true, false});
    const GaussianConditional cond = mvn_condition(model, sample);

    // Discretize x2 and integrate the trivariate density directly.
    const Eigen::MatrixXd prec = model.covariance.inverse();
    double mass = 0.0, mean = 0.0, second = 0.0;
    const double step = 1e-3;
    for (double v = -8.0; v <= 8.0; v += step) {
      Eigen::Vector3d x(1.0, v, -1.0);
      const double density = std::exp(-0.5 * x.dot(prec * x));
      mass += density;
      mean += v * density;
      second += v * v * density;
    }
    mean /= mass;
    second /= mass;
    CHECK(std::abs(cond.mean[0] - mean) < 1e-3);
    CHECK(std::abs(cond.covariance(0, 0) - (second - mean * mean)) < 1e-3);
  }

  SUBCASE("tower property on random 5-dim models") {
    Rng rng(73);
    for (int trial = 0; trial < 20; ++trial) {
      MvnModel model = random_model(5, rng);
      // Condition on {3, 4}; the conditional of {0} must match whether we
      // take the 3-dim conditional and marginalize or target {0} directly.
      std::vector<double> values = {0, 0, 0, 1.3, -0.4};
      const MaskedSample wide(values, {true, true, true, false, false});
      const GaussianConditional joint = mvn_condition(model, wide);
      const MaskedSample narrow(values, {true, false, false, false, false});
      MvnModel reduced;  // drop coordinates 1, 2 entirely
      reduced.mean = Eigen::VectorXd(3);
      reduced.mean << model.mean[0], model.mean[3], model.mean[4];
      reduced.covariance.resize(3, 3);
      const int keep[3] = {0, 3, 4};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          reduced.covariance(i, j) = model.covariance(keep[i], keep[j]);
      const MaskedSample reduced_sample({0, 1.3, -0.4}, {true, false, false});
      const GaussianConditional direct = mvn_condition(reduced, reduced_sample);
      REQUIRE(std::abs(joint.mean[0] - direct.mean[0]) < 1e-10);
      REQUIRE(std::abs(joint.covariance(0, 0) - direct.covariance(0, 0)) < 1e-10);
    }
  }

  SUBCASE("a non-PSD observed block is signalled") {
    MvnModel model;
    model.mean = Eigen::VectorXd::Zero(3);
    model.covariance.resize(3, 3);
    model.covariance << 1, 0, 0, 0, 1, 2, 0, 2, 1;  // indefinite lower block
    const MaskedSample sample({0.0, 1.0, 1.0}, {true, false, false});
    CHECK_THROWS_AS(mvn_condition(model, sample), SingularObservedBlock);
  }
}

TEST_CASE("conditional sampling") {
  SUBCASE("zero covariance returns the mean") {
    GaussianConditional cond;
    cond.target = {0, 1};
    cond.mean = Eigen::Vector2d(1.5, -2.0);
    cond.covariance = Eigen::MatrixXd::Zero(2, 2);
    Rng rng(3);
    CHECK(sample_conditional(cond, rng).isApprox(cond.mean));
  }

  SUBCASE("one-dimensional moments") {
    GaussianConditional cond;
    cond.target = {0};
    cond.mean = Eigen::VectorXd::Constant(1, 2.0);
    cond.covariance = Eigen::MatrixXd::Constant(1, 1, 3.0);
    Rng rng(11);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = sample_conditional(cond, rng)[0];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 2.0) < 4.0 * std::sqrt(3.0 / n));
    CHECK(std::abs(var - 3.0) < 4.0 * 3.0 * std::sqrt(2.0 / n));
  }

  SUBCASE("nothing observed samples the unconditional law") {
    MvnModel model = ar1_model(2, 0.7);
    model.mean << 1.0, -1.0;
    const GaussianConditional cond =
        mvn_condition(model, MaskedSample({0.0, 0.0}, {true, true}));
    Rng rng(19);
    const int n = 50000;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd v = sample_conditional(cond, rng);
      sum += v;
      cross += (v[0] - 1.0) * (v[1] + 1.0);
    }
    CHECK(std::abs(sum[0] / n - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sum[1] / n + 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(cross / n - 0.7) < 4.0 * std::sqrt(2.0 / n));
  }

  SUBCASE("fixed seeds reproduce draws") {
    GaussianConditional cond;
    cond.target = {0, 1};
    cond.mean = Eigen::Vector2d(0, 0);
    cond.covariance = make_ar1_covariance(2, 0.5);
    Rng a(77), b(77);
    CHECK((sample_conditional(cond, a).array() == sample_conditional(cond, b).array()).all());
  }
}

TEST_CASE("marginal moments") {
  MvnModel model = ar1_model(4, 0.6);
  model.mean.setConstant(2.0);
  for (int j = 0; j < 4; ++j) {
    const ScalarMoments m = mvn_marginal(model, j);
    CHECK(m.mean == 2.0);
    CHECK(m.variance == 1.0);
  }
  CHECK_THROWS_AS(mvn_marginal(model, 9), std::out_of_range);
}

TEST_CASE("equicorrelated knockoff construction") {
  SUBCASE("2x2 closed forms") {
    CHECK(GaussianKnockoffSampler::build(ar1_model(2, 0.5)).s_vector()[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(GaussianKnockoffSampler::build(ar1_model(2, 0.8)).s_vector()[0] ==
          doctest::Approx(0.4).epsilon(1e-10));
  }

  SUBCASE("AR(1) five dims against an independent eigensolver") {
    MvnModel model = ar1_model(5, 0.6);
    const GaussianKnockoffSampler sampler = GaussianKnockoffSampler::build(model);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.covariance,
                                                      Eigen::EigenvaluesOnly);
    const double expected = std::min(2.0 * es.eigenvalues().minCoeff(), 1.0);
    for (int j = 0; j < 5; ++j)
      CHECK(sampler.s_vector()[j] == doctest::Approx(expected).epsilon(1e-10));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(sampler.joint_covariance(),
                                                      Eigen::EigenvaluesOnly);
    CHECK(gs.eigenvalues().minCoeff() > -1e-8);
  }

  SUBCASE("non positive definite input is rejected") {
    MvnModel model;
    model.mean = Eigen::VectorXd::Zero(2);
    model.covariance.resize(2, 2);
    model.covariance << 1, 1, 1, 1;
    CHECK_THROWS_AS(GaussianKnockoffSampler::build(model), NotPositiveDefinite);
  }
}

TEST_CASE("knockoff sampling joint law") {
  MvnModel model = ar1_model(2, 0.5);
  const GaussianKnockoffSampler sampler = GaussianKnockoffSampler::build(model);
  const Eigen::MatrixXd g = sampler.joint_covariance();
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.covariance).matrixL();

  Rng rng(83);
  const int n = 100000;
  Eigen::MatrixXd draws(n, 4);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_mvn(model.mean, chol, rng);
    const Eigen::VectorXd xt = sampler.sample(x, rng);
    draws(i, 0) = x[0];
    draws(i, 1) = x[1];
    draws(i, 2) = xt[0];
    draws(i, 3) = xt[1];
  }
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / n;

  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / n);
      REQUIRE(std::abs(cov(i, j) - g(i, j)) < 4.0 * se);
    }

  // Corr(X_j, Xt_j) = 1 - s_j on the correlation scale (unit variances here).
  for (int j = 0; j < 2; ++j) {
    const double corr = cov(j, j + 2) / std::sqrt(cov(j, j) * cov(j + 2, j + 2));
    CHECK(std::abs(corr - (1.0 - sampler.s_vector()[j])) < 4.0 / std::sqrt(1.0 * n));
  }

  SUBCASE("swapped pairs keep the same first two moments") {
    // Swap coordinate 0 between x and the knockoff in every draw.
    Eigen::MatrixXd swapped = draws;
    swapped.col(0).swap(swapped.col(2));
    const Eigen::RowVectorXd mean_s = swapped.colwise().mean();
    const Eigen::MatrixXd centered_s = swapped.rowwise() - mean_s;
    const Eigen::MatrixXd cov_s = centered_s.transpose() * centered_s / n;
    for (int i = 0; i < 4; ++i) {
      REQUIRE(std::abs(mean_s[i] - mean[i]) < 4.0 * std::sqrt(g(i, i) / n) * 2.0);
      for (int j = 0; j < 4; ++j) {
        const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / n);
        REQUIRE(std::abs(cov_s(i, j) - cov(i, j)) < 4.0 * 2.0 * se);
      }
    }
  }

  SUBCASE("nearly singular covariance pins knockoffs to the data") {
    MvnModel tight = ar1_model(2, 0.999);
    const GaussianKnockoffSampler s = GaussianKnockoffSampler::build(tight);
    CHECK(s.s_vector()[0] < 0.01);
    Rng r(5);
    const Eigen::VectorXd x = sample_mvn(tight.mean,
                                         Eigen::LLT<Eigen::MatrixXd>(tight.covariance).matrixL(), r);
    const Eigen::VectorXd xt = s.sample(x, r);
    CHECK((xt - x).cwiseAbs().maxCoeff() < 0.5);
  }
}

TEST_CASE("psd square root clamps tiny negatives and rejects real ones") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
  CHECK(psd_sqrt(zero).isZero());

  Eigen::MatrixXd negative(2, 2);
  negative << 1, 0, 0, -0.5;
  CHECK_THROWS_AS(psd_sqrt(negative), NotPositiveDefinite);

  Eigen::MatrixXd tiny = -1e-14 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd b = psd_sqrt(tiny);
  CHECK(b.isZero(1e-6));
}
