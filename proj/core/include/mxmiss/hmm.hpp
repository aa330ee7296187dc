#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "mxmiss/choices.hpp"
#include "mxmiss/masked_sample.hpp"
#include "mxmiss/models.hpp"

namespace mxmiss {

struct ZeroEvidence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Forward quantities alpha_t(z) = P(Z_t = z, X_{o(t)} = x_{o(t)}), where
// o(t) is the set of observed positions up to t. Rows are stored
// renormalized to sum 1 with the running log normalizer kept separately;
// alpha underflows around T ~ 300 otherwise, and every posterior
// conditional uses ratios in which the normalizer cancels.
struct AlphaTable {
  Eigen::MatrixXd scaled;    // T x K, each row sums to 1
  Eigen::VectorXd log_norm;  // cumulative log normalizer per row

  int length() const { return static_cast<int>(scaled.rows()); }
  int num_states() const { return static_cast<int>(scaled.cols()); }

  // Unscaled alpha_t(z); underflows for large T, fine on enumerable models.
  double value(int t, int z) const { return scaled(t, z) * std::exp(log_norm(t)); }

  // log P(X_o = x_o).
  double log_evidence() const { return log_norm(length() - 1); }
};

using LatentPath = std::vector<int>;

// Forward pass over a partially observed emission sequence. Missing
// positions contribute no emission factor. Throws ZeroEvidence when the
// observed symbols are impossible under the model.
AlphaTable forward_alpha(const HmmModel& model, const MaskedSample& sample);

// Exact posterior draw Z ~ P(Z | X_o): samples z_T from alpha_T, then
// backwards z_t proportional to P(z_{t+1} | z_t) alpha_t(z_t).
LatentPath backward_sample_posterior(const HmmModel& model, const AlphaTable& alpha,
                                     Choices& choices);
LatentPath backward_sample_posterior(const HmmModel& model, const AlphaTable& alpha,
                                     Rng& rng);

// Draws x_t ~ P(X_t | Z_t = path_t) independently for each t in `positions`;
// the returned symbols align with `positions`.
std::vector<int> impute_emissions(const HmmModel& model, const LatentPath& path,
                                  std::span<const int> positions, Choices& choices);
std::vector<int> impute_emissions(const HmmModel& model, const LatentPath& path,
                                  std::span<const int> positions, Rng& rng);

// Knockoff copy of a Markov-chain path by sequential conditional
// independent pairs; each conditional is computed exactly by dynamic
// programming along the chain, O(T K^2) total. The pair (Z, Z') is
// pairwise exchangeable with respect to the chain law.
LatentPath sample_markov_knockoff(const HmmModel& model, const LatentPath& z,
                                  Choices& choices);
LatentPath sample_markov_knockoff(const HmmModel& model, const LatentPath& z, Rng& rng);

struct DiscretePair {
  std::vector<int> imputed;
  std::vector<int> knockoff;
};

// Joint imputation + knockoff sampling for HMM data with missing values:
// z_hat ~ P(Z | X_o), x_hat_m ~ P(X_m | z_hat), z' knockoff of z_hat,
// x_tilde ~ P(X | z') coordinate-wise. imputed agrees with the sample on
// observed positions.
DiscretePair modified_sesia_knockoffs(const HmmModel& model, const MaskedSample& sample,
                                      Choices& choices);
DiscretePair modified_sesia_knockoffs(const HmmModel& model, const MaskedSample& sample,
                                      Rng& rng);

// P(X_t = .), mixing emissions over the chain marginal of Z_t.
Eigen::VectorXd hmm_univariate_marginal(const HmmModel& model, int t);

// Extracts integer symbols from a masked sample (missing entries -1).
std::vector<int> symbols_of(const MaskedSample& sample);

}  // namespace mxmiss
