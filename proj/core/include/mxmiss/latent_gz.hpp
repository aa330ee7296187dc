#pragma once

#include <vector>

#include "mxmiss/choices.hpp"
#include "mxmiss/hmm.hpp"
#include "mxmiss/masked_sample.hpp"
#include "mxmiss/models.hpp"

namespace mxmiss {

// P(Z = z | X_o = x_o) as a normalized table over the flattened latent
// support. Throws ZeroEvidence when the observed values are impossible.
std::vector<double> latent_posterior(const LatentFactorModel& model,
                                     const MaskedSample& sample);

// Joint imputation + knockoff sampling for conditional-independence latent
// factor models:
//   (1) z_hat ~ P(Z | X_o);
//   (2) x_hat_m ~ P(X_m | Z = z_hat) coordinate-wise;
//   (3) z'_i ~ P(Z_i | X = x_hat, Z_{i+1:L} = z_hat_{i+1:L}, Z_{1:i-1} = z'_{1:i-1})
//       sequentially for i = 1..L, each conditional enumerated over Z_i's
//       support from the factored joint;
//   (4) x_tilde_i ~ P(X_i | Z = z') independently for every coordinate.
// The output pair (x_hat, x_tilde) is pairwise exchangeable under MCAR/MAR.
DiscretePair gz_knockoffs(const LatentFactorModel& model, const MaskedSample& sample,
                          Choices& choices);
DiscretePair gz_knockoffs(const LatentFactorModel& model, const MaskedSample& sample,
                          Rng& rng);

// Marginal law of one observed coordinate.
std::vector<double> latent_factor_marginal(const LatentFactorModel& model, int coord);

}  // namespace mxmiss
