#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "mxmiss/masked_sample.hpp"
#include "mxmiss/models.hpp"
#include "mxmiss/mvn.hpp"
#include "mxmiss/rng.hpp"

namespace mxmiss {

// Output of one imputation + knockoff pass over a row. `imputed` agrees
// with the original sample on the observed coordinates.
struct KnockoffPair {
  Eigen::VectorXd imputed;
  Eigen::VectorXd knockoff;
  std::vector<bool> mask;
};

// Completes a masked row, keeping the observed coordinates.
using PosteriorImputer = std::function<Eigen::VectorXd(const MaskedSample&, Rng&)>;
// Samples a knockoff for a complete row.
using KnockoffSamplerFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)>;

// Posterior-imputation knockoffs: per row, draw x_hat_m ~ P(X_m | X_o),
// then a knockoff of the completed vector with any sampler that is
// pairwise exchangeable with respect to P_X. Rows are processed i.i.d. on
// independent RNG substreams; a failing row aborts the run.
std::vector<KnockoffPair> posterior_knockoffs(std::span<const MaskedSample> rows,
                                              const PosteriorImputer& imputer,
                                              const KnockoffSamplerFn& sampler,
                                              Rng& rng);

// Knockoff sampler for the observed block of one missingness pattern.
using ObservedKnockoffSampler =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x_o, Rng&)>;
// Builds the pattern-specific sampler for an observed index set.
using ObservedSamplerFactory =
    std::function<ObservedKnockoffSampler(const std::vector<int>& observed)>;
// Draws one value from the marginal P(X_j).
using MarginalSampler = std::function<double(int j, Rng&)>;

enum class MissingMechanism { kMcar, kMar };

// Univariate-imputation knockoffs: per row, sample knockoffs for the
// observed block from the pattern-specific sampler, then fill each missing
// coordinate of both the original and the knockoff with fresh independent
// marginal draws. Valid under MCAR only; a declared MAR mechanism is
// refused unless explicitly overridden. Pattern samplers are cached by
// mask within the pass.
std::vector<KnockoffPair> univariate_knockoffs(
    std::span<const MaskedSample> rows, const ObservedSamplerFactory& factory,
    const MarginalSampler& marginal, Rng& rng,
    MissingMechanism declared = MissingMechanism::kMcar, bool allow_mar = false);

// MVN instantiations of the two pipelines.
PosteriorImputer make_mvn_posterior_imputer(const MvnModel& model);
KnockoffSamplerFn make_mvn_knockoff_sampler(const MvnModel& model);
ObservedSamplerFactory make_mvn_observed_factory(const MvnModel& model);
MarginalSampler make_mvn_marginal_sampler(const MvnModel& model);

// HMM instantiation of the posterior pipeline: posterior latent sampling
// plus emission imputation completes the row; the knockoff sampler is the
// latent-chain sampler applied to complete data.
PosteriorImputer make_hmm_posterior_imputer(const HmmModel& model);
KnockoffSamplerFn make_hmm_knockoff_sampler(const HmmModel& model);

// ---------------------------------------------------------------------------
// Imputation MSE analytics

struct MseReport {
  double mse_posterior = 0.0;
  double mse_univariate = 0.0;
  double se_posterior = 0.0;
  double se_univariate = 0.0;
  double analytic_posterior = 0.0;   // 2 (Var(Y) - Var(E[Y|X]))
  double analytic_univariate = 0.0;  // 2 Var(Y)
};

// Monte Carlo MSE of posterior vs univariate imputation of coordinate
// `target` given the rest, with the Gaussian closed forms alongside.
MseReport mse_compare(const MvnModel& model, int target, int num_samples, Rng& rng);

}  // namespace mxmiss
