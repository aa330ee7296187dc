#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "mxmiss/models.hpp"
#include "mxmiss/pipelines.hpp"
#include "mxmiss/verify.hpp"

using namespace mxmiss;

namespace {

std::vector<MaskedSample> mvn_rows(const MvnModel& model, int n, double p0,
                                   Rng& rng) {
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.covariance).matrixL();
  std::vector<MaskedSample> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_mvn(model.mean, chol, rng);
    std::vector<bool> mask(model.dim());
    for (int j = 0; j < model.dim(); ++j) mask[j] = rng.bernoulli(p0);
    rows.emplace_back(std::vector<double>(x.data(), x.data() + model.dim()),
                      std::move(mask));
  }
  return rows;
}

}  // namespace

TEST_CASE("posterior pipeline with no missing values is plain knockoff sampling") {
  MvnModel model{Eigen::VectorXd::Zero(3), make_ar1_covariance(3, 0.4)};
  Rng rng(7);
  const std::vector<MaskedSample> rows = mvn_rows(model, 20, 0.0, rng);

  Rng pipe_a = Rng::from_keys(55);
  const auto pairs = posterior_knockoffs(rows, make_mvn_posterior_imputer(model),
                                         make_mvn_knockoff_sampler(model), pipe_a);

  const GaussianKnockoffSampler sampler = GaussianKnockoffSampler::build(model);
  Rng pipe_b = Rng::from_keys(55);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x[j] = rows[i].values[j];
    REQUIRE((pairs[i].imputed.array() == x.array()).all());
    Rng row_rng = pipe_b.split(i);
    REQUIRE((pairs[i].knockoff.array() == sampler.sample(x, row_rng).array()).all());
  }
}

TEST_CASE("posterior pipeline restores the covariance of a fully masked coordinate") {
  MvnModel model{Eigen::VectorXd::Zero(2), make_ar1_covariance(2, 0.6)};
  const int n = 100000;
  Rng rng(13);
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.covariance).matrixL();
  std::vector<MaskedSample> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_mvn(model.mean, chol, rng);
    rows.emplace_back(std::vector<double>{x[0], x[1]}, std::vector<bool>{false, true});
  }
  Rng pipe(17);
  const auto pairs = posterior_knockoffs(rows, make_mvn_posterior_imputer(model),
                                         make_mvn_knockoff_sampler(model), pipe);
  Eigen::MatrixXd draws(n, 2);
  for (int i = 0; i < n; ++i) draws.row(i) = pairs[i].imputed.transpose();
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd cov =
      (draws.rowwise() - mean).transpose() * (draws.rowwise() - mean) / n;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double g = model.covariance(i, j);
      const double se = std::sqrt((1.0 + g * g) / n);
      REQUIRE(std::abs(cov(i, j) - g) < 4.0 * se);
    }
}

TEST_CASE("pipelines read only the observed values") {
  MvnModel model{Eigen::VectorXd::Zero(3), make_ar1_covariance(3, 0.5)};
  // Two datasets that agree on the observed coordinates but came from
  // different complete vectors; the pipeline must not see the difference.
  const std::vector<bool> mask = {false, true, false};
  std::vector<MaskedSample> a, b;
  a.emplace_back(std::vector<double>{1.0, 42.0, -0.5}, mask);
  b.emplace_back(std::vector<double>{1.0, -99.0, -0.5}, mask);

  Rng ra(21), rb(21);
  const auto pa = posterior_knockoffs(a, make_mvn_posterior_imputer(model),
                                      make_mvn_knockoff_sampler(model), ra);
  const auto pb = posterior_knockoffs(b, make_mvn_posterior_imputer(model),
                                      make_mvn_knockoff_sampler(model), rb);
  CHECK((pa[0].imputed.array() == pb[0].imputed.array()).all());
  CHECK((pa[0].knockoff.array() == pb[0].knockoff.array()).all());
}

TEST_CASE("univariate pipeline") {
  MvnModel model{Eigen::VectorXd::Zero(3), make_ar1_covariance(3, 0.5)};

  SUBCASE("declared MAR is refused without the override") {
    std::vector<MaskedSample> rows;
    rows.emplace_back(std::vector<double>{1.0, 0.0, 0.0}, std::vector<bool>{false, true, true});
    Rng rng(1);
    CHECK_THROWS_AS(univariate_knockoffs(rows, make_mvn_observed_factory(model),
                                         make_mvn_marginal_sampler(model), rng,
                                         MissingMechanism::kMar),
                    std::invalid_argument);
    Rng rng2(1);
    CHECK_NOTHROW(univariate_knockoffs(rows, make_mvn_observed_factory(model),
                                       make_mvn_marginal_sampler(model), rng2,
                                       MissingMechanism::kMar, /*allow_mar=*/true));
  }

  SUBCASE("fully missing rows become independent marginal products") {
    const int n = 60000;
    std::vector<MaskedSample> rows;
    rows.reserve(n);
    for (int i = 0; i < n; ++i)
      rows.emplace_back(std::vector<double>(3, 0.0), std::vector<bool>(3, true));
    Rng rng(29);
    const auto pairs = univariate_knockoffs(rows, make_mvn_observed_factory(model),
                                            make_mvn_marginal_sampler(model), rng);
    double cross = 0.0, var0 = 0.0;
    for (const auto& pair : pairs) {
      cross += pair.imputed[0] * pair.imputed[1];
      var0 += pair.imputed[0] * pair.imputed[0];
    }
    // Imputed coordinates are independent: no AR(1) correlation survives.
    CHECK(std::abs(cross / n) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var0 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }

  SUBCASE("always-missing third coordinate: swapped moments match") {
    const int n = 100000;
    Rng data(31);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.covariance).matrixL();
    std::vector<MaskedSample> rows;
    rows.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = sample_mvn(model.mean, chol, data);
      rows.emplace_back(std::vector<double>{x[0], x[1], x[2]},
                        std::vector<bool>{false, false, true});
    }
    Rng pipe(37);
    const auto pairs = univariate_knockoffs(rows, make_mvn_observed_factory(model),
                                            make_mvn_marginal_sampler(model), pipe);
    Eigen::MatrixXd draws(n, 6);
    for (int i = 0; i < n; ++i) {
      draws.row(i).head(3) = pairs[i].imputed.transpose();
      draws.row(i).tail(3) = pairs[i].knockoff.transpose();
    }
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    const Eigen::MatrixXd cov =
        (draws.rowwise() - mean).transpose() * (draws.rowwise() - mean) / n;

    for (int s = 1; s < 8; ++s) {
      Eigen::MatrixXd swapped = draws;
      for (int j = 0; j < 3; ++j)
        if (s & (1 << j)) swapped.col(j).swap(swapped.col(j + 3));
      const Eigen::RowVectorXd mean_s = swapped.colwise().mean();
      const Eigen::MatrixXd cov_s =
          (swapped.rowwise() - mean_s).transpose() * (swapped.rowwise() - mean_s) / n;
      for (int i = 0; i < 6; ++i) {
        REQUIRE(std::abs(mean_s[i] - mean[i]) < 8.0 / std::sqrt(static_cast<double>(n)));
        for (int j = 0; j < 6; ++j)
          REQUIRE(std::abs(cov_s(i, j) - cov(i, j)) < 8.0 * std::sqrt(2.0 / n));
      }
    }
  }
}

TEST_CASE("imputation mse closed forms") {
  SUBCASE("bivariate with correlation 0.6") {
    MvnModel model{Eigen::VectorXd::Zero(2), make_ar1_covariance(2, 0.6)};
    Rng rng(41);
    const MseReport report = mse_compare(model, 0, 40000, rng);
    CHECK(report.analytic_posterior == doctest::Approx(2.0 * (1.0 - 0.36)).epsilon(1e-12));
    CHECK(report.analytic_univariate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(report.mse_posterior - report.analytic_posterior) <
          4.0 * report.se_posterior);
    CHECK(std::abs(report.mse_univariate - report.analytic_univariate) <
          4.0 * report.se_univariate);
  }

  SUBCASE("independent coordinates make both equal") {
    MvnModel model{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
    Rng rng(43);
    const MseReport report = mse_compare(model, 1, 20000, rng);
    CHECK(report.analytic_posterior == doctest::Approx(2.0));
    CHECK(report.analytic_univariate == doctest::Approx(2.0));
  }

  SUBCASE("nearly determined coordinate has nearly zero posterior mse") {
    MvnModel model{Eigen::VectorXd::Zero(2), make_ar1_covariance(2, 0.9999)};
    Rng rng(47);
    const MseReport report = mse_compare(model, 0, 20000, rng);
    CHECK(report.analytic_posterior < 1e-3);
    CHECK(report.mse_posterior < 1e-2);
  }

  SUBCASE("posterior never loses to univariate across random models") {
    const auto results = verify_mse(/*seed=*/7);
    for (const auto& r : results) CHECK(r.pass);
  }
}
