#include <benchmark/benchmark.h>

#include <Eigen/Cholesky>

#include "mxmiss/hmm.hpp"
#include "mxmiss/models.hpp"
#include "mxmiss/mvn.hpp"
#include "mxmiss/pipelines.hpp"
#include "mxmiss/selection.hpp"

namespace {

using namespace mxmiss;

void BM_ForwardAlpha(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  const HmmModel model = make_nine_state_hmm(t_len);
  Rng rng(1);
  std::vector<double> values(t_len);
  std::vector<bool> mask(t_len);
  for (int t = 0; t < t_len; ++t) {
    mask[t] = rng.bernoulli(0.3);
    values[t] = rng.uniform_int(9);
  }
  values[0] = 1;
  mask[0] = false;
  const MaskedSample sample(values, mask);
  for (auto _ : state) {
    AlphaTable alpha = forward_alpha(model, sample);
    benchmark::DoNotOptimize(alpha.log_evidence());
  }
}
BENCHMARK(BM_ForwardAlpha)->Arg(60)->Arg(1000);

void BM_ModifiedSesia(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  const HmmModel model = make_nine_state_hmm(t_len);
  Rng rng(2);
  auto [z, symbols] = model.simulate(rng);
  std::vector<double> values(symbols.begin(), symbols.end());
  std::vector<bool> mask(t_len);
  for (int t = 0; t < t_len; ++t) mask[t] = rng.bernoulli(0.3);
  const MaskedSample sample(values, mask);
  for (auto _ : state) {
    DiscretePair pair = modified_sesia_knockoffs(model, sample, rng);
    benchmark::DoNotOptimize(pair.knockoff.data());
  }
}
BENCHMARK(BM_ModifiedSesia)->Arg(60)->Arg(1000);

void BM_MvnCondition(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  MvnModel model{Eigen::VectorXd::Zero(p), make_ar1_covariance(p, 0.5)};
  Rng rng(3);
  std::vector<double> values(p);
  std::vector<bool> mask(p);
  for (int j = 0; j < p; ++j) {
    mask[j] = rng.bernoulli(0.3);
    values[j] = rng.gaussian();
  }
  const MaskedSample sample(values, mask);
  for (auto _ : state) {
    GaussianConditional cond = mvn_condition(model, sample);
    benchmark::DoNotOptimize(cond.mean.data());
  }
}
BENCHMARK(BM_MvnCondition)->Arg(50)->Arg(200);

void BM_GaussianKnockoffSample(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  MvnModel model{Eigen::VectorXd::Zero(p), make_ar1_covariance(p, 0.5)};
  const GaussianKnockoffSampler sampler = GaussianKnockoffSampler::build(model);
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.covariance).matrixL();
  Rng rng(4);
  const Eigen::VectorXd x = sample_mvn(model.mean, chol, rng);
  for (auto _ : state) {
    Eigen::VectorXd xt = sampler.sample(x, rng);
    benchmark::DoNotOptimize(xt.data());
  }
}
BENCHMARK(BM_GaussianKnockoffSample)->Arg(50)->Arg(200);

void BM_LassoLogisticFit(benchmark::State& state) {
  const int n = 150, d = 100;
  Rng rng(5);
  Eigen::MatrixXd design(n, d);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    double eta = 0.0;
    for (int j = 0; j < d; ++j) {
      design(i, j) = rng.gaussian();
      if (j < 6) eta += 0.8 * design(i, j);
    }
    labels[i] = rng.bernoulli(sigmoid(eta)) ? 1 : 0;
  }
  design = standardize_columns(std::move(design));
  const double lambda = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    LassoLogisticFit fit = fit_lasso_logistic(design, labels, lambda);
    benchmark::DoNotOptimize(fit.coefficients.data());
  }
}
BENCHMARK(BM_LassoLogisticFit)->Arg(100)->Arg(10);

}  // namespace
