#include "mxmiss/pipelines.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "mxmiss/hmm.hpp"

namespace mxmiss {

std::vector<KnockoffPair> posterior_knockoffs(std::span<const MaskedSample> rows,
                                              const PosteriorImputer& imputer,
                                              const KnockoffSamplerFn& sampler,
                                              Rng& rng) {
  std::vector<KnockoffPair> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Rng row_rng = rng.split(i);
    KnockoffPair pair;
    pair.mask = rows[i].missing;
    pair.imputed = imputer(rows[i], row_rng);
    pair.knockoff = sampler(pair.imputed, row_rng);
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<KnockoffPair> univariate_knockoffs(std::span<const MaskedSample> rows,
                                               const ObservedSamplerFactory& factory,
                                               const MarginalSampler& marginal, Rng& rng,
                                               MissingMechanism declared, bool allow_mar) {
  if (declared == MissingMechanism::kMar && !allow_mar)
    throw std::invalid_argument(
        "univariate_knockoffs: the univariate pipeline is only valid under MCAR; "
        "pass allow_mar to override");
  std::map<std::vector<bool>, ObservedKnockoffSampler> cache;
  std::vector<KnockoffPair> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Rng row_rng = rng.split(i);
    const MaskedSample& row = rows[i];
    const std::vector<int> observed = row.observed_indices();
    const std::vector<int> missing = row.missing_indices();

    auto it = cache.find(row.missing);
    if (it == cache.end()) {
      try {
        it = cache.emplace(row.missing, factory(observed)).first;
      } catch (const std::exception& e) {
        std::string pattern(row.size(), '0');
        for (std::size_t k = 0; k < row.size(); ++k)
          if (row.missing[k]) pattern[k] = '1';
        throw std::runtime_error("univariate_knockoffs: sampler factory failed for mask " +
                                 pattern + ": " + e.what());
      }
    }

    KnockoffPair pair;
    pair.mask = row.missing;
    pair.imputed.resize(row.size());
    pair.knockoff.resize(row.size());

    Eigen::VectorXd x_o(observed.size());
    for (std::size_t k = 0; k < observed.size(); ++k) x_o[k] = row.values[observed[k]];
    const Eigen::VectorXd xt_o = it->second(x_o, row_rng);
    if (xt_o.size() != static_cast<Eigen::Index>(observed.size()))
      throw std::runtime_error("univariate_knockoffs: observed sampler size mismatch");

    for (std::size_t k = 0; k < observed.size(); ++k) {
      pair.imputed[observed[k]] = x_o[k];
      pair.knockoff[observed[k]] = xt_o[k];
    }
    for (int j : missing) {
      pair.imputed[j] = marginal(j, row_rng);
      pair.knockoff[j] = marginal(j, row_rng);
    }
    out.push_back(std::move(pair));
  }
  return out;
}

PosteriorImputer make_mvn_posterior_imputer(const MvnModel& model) {
  return [model](const MaskedSample& sample, Rng& rng) {
    Eigen::VectorXd x(sample.size());
    for (std::size_t j = 0; j < sample.size(); ++j)
      x[j] = sample.missing[j] ? 0.0 : sample.values[j];
    const std::vector<int> missing = sample.missing_indices();
    if (missing.empty()) return x;
    const GaussianConditional cond = mvn_condition(model, sample);
    const Eigen::VectorXd draw = sample_conditional(cond, rng);
    for (std::size_t k = 0; k < missing.size(); ++k) x[missing[k]] = draw[k];
    return x;
  };
}

KnockoffSamplerFn make_mvn_knockoff_sampler(const MvnModel& model) {
  auto sampler = std::make_shared<GaussianKnockoffSampler>(GaussianKnockoffSampler::build(model));
  return [sampler](const Eigen::VectorXd& x, Rng& rng) { return sampler->sample(x, rng); };
}

ObservedSamplerFactory make_mvn_observed_factory(const MvnModel& model) {
  return [model](const std::vector<int>& observed) -> ObservedKnockoffSampler {
    if (observed.empty())
      return [](const Eigen::VectorXd& x_o, Rng&) { return x_o; };
    MvnModel sub;
    sub.mean.resize(observed.size());
    sub.covariance.resize(observed.size(), observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) {
      sub.mean[i] = model.mean[observed[i]];
      for (std::size_t j = 0; j < observed.size(); ++j)
        sub.covariance(i, j) = model.covariance(observed[i], observed[j]);
    }
    auto sampler = std::make_shared<GaussianKnockoffSampler>(GaussianKnockoffSampler::build(sub));
    return [sampler](const Eigen::VectorXd& x_o, Rng& rng) { return sampler->sample(x_o, rng); };
  };
}

MarginalSampler make_mvn_marginal_sampler(const MvnModel& model) {
  return [model](int j, Rng& rng) {
    const ScalarMoments m = mvn_marginal(model, j);
    return m.mean + std::sqrt(m.variance) * rng.gaussian();
  };
}

PosteriorImputer make_hmm_posterior_imputer(const HmmModel& model) {
  return [model](const MaskedSample& sample, Rng& rng) {
    std::vector<int> symbols = symbols_of(sample);
    const std::vector<int> missing = sample.missing_indices();
    if (!missing.empty()) {
      const AlphaTable alpha = forward_alpha(model, sample);
      const LatentPath z_hat = backward_sample_posterior(model, alpha, rng);
      const std::vector<int> draws = impute_emissions(model, z_hat, missing, rng);
      for (std::size_t k = 0; k < missing.size(); ++k) symbols[missing[k]] = draws[k];
    }
    Eigen::VectorXd x(sample.size());
    for (std::size_t j = 0; j < sample.size(); ++j) x[j] = symbols[j];
    return x;
  };
}

KnockoffSamplerFn make_hmm_knockoff_sampler(const HmmModel& model) {
  return [model](const Eigen::VectorXd& x, Rng& rng) {
    std::vector<double> values(x.data(), x.data() + x.size());
    const MaskedSample complete =
        MaskedSample(std::move(values), std::vector<bool>(x.size(), false));
    const DiscretePair pair = modified_sesia_knockoffs(model, complete, rng);
    Eigen::VectorXd xt(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t) xt[t] = pair.knockoff[t];
    return xt;
  };
}

MseReport mse_compare(const MvnModel& model, int target, int num_samples, Rng& rng) {
  const int p = model.dim();
  if (target < 0 || target >= p) throw std::out_of_range("mse_compare: bad target index");
  if (num_samples < 2) throw std::invalid_argument("mse_compare: need at least 2 samples");

  std::vector<int> rest;
  for (int j = 0; j < p; ++j)
    if (j != target) rest.push_back(j);

  // Var(E[Y|X]) = S_jr S_rr^{-1} S_rj in the Gaussian case.
  double explained = 0.0;
  if (!rest.empty()) {
    Eigen::MatrixXd s_rr(rest.size(), rest.size());
    Eigen::VectorXd s_rj(rest.size());
    for (std::size_t i = 0; i < rest.size(); ++i) {
      s_rj[i] = model.covariance(rest[i], target);
      for (std::size_t j = 0; j < rest.size(); ++j)
        s_rr(i, j) = model.covariance(rest[i], rest[j]);
    }
    explained = s_rj.dot(Eigen::LLT<Eigen::MatrixXd>(s_rr).solve(s_rj));
  }
  const double var_y = model.covariance(target, target);

  MseReport report;
  report.analytic_posterior = 2.0 * (var_y - explained);
  report.analytic_univariate = 2.0 * var_y;

  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.covariance).matrixL();
  std::vector<bool> mask(p, false);
  mask[target] = true;

  double sum_post = 0.0, sumsq_post = 0.0, sum_uni = 0.0, sumsq_uni = 0.0;
  const double sd_y = std::sqrt(var_y);
  for (int it = 0; it < num_samples; ++it) {
    const Eigen::VectorXd x = sample_mvn(model.mean, chol, rng);
    const double y = x[target];

    std::vector<double> values(x.data(), x.data() + p);
    const MaskedSample sample(std::move(values), mask);
    const GaussianConditional cond = mvn_condition(model, sample);
    const double y_post = sample_conditional(cond, rng)[0];
    const double y_uni = model.mean[target] + sd_y * rng.gaussian();

    const double e_post = (y - y_post) * (y - y_post);
    const double e_uni = (y - y_uni) * (y - y_uni);
    sum_post += e_post;
    sumsq_post += e_post * e_post;
    sum_uni += e_uni;
    sumsq_uni += e_uni * e_uni;
  }
  const double n = num_samples;
  report.mse_posterior = sum_post / n;
  report.mse_univariate = sum_uni / n;
  report.se_posterior =
      std::sqrt(std::max(0.0, sumsq_post / n - report.mse_posterior * report.mse_posterior) / n);
  report.se_univariate =
      std::sqrt(std::max(0.0, sumsq_uni / n - report.mse_univariate * report.mse_univariate) / n);
  return report;
}

}  // namespace mxmiss
