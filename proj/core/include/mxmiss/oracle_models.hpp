#pragma once

#include <vector>

#include "mxmiss/models.hpp"
#include "mxmiss/oracle.hpp"
#include "mxmiss/rng.hpp"
#include "mxmiss/table_model.hpp"

namespace mxmiss {

// Randomized desk-scale models and independent brute-force computations
// backing the verification suites. Everything here enumerates explicitly
// and never calls the recursions it is used to certify.

HmmModel random_hmm(int length, int num_states, int num_symbols, Rng& rng,
                    double floor = 0.1);

TableModel random_table_model(const std::vector<int>& cardinalities, Rng& rng,
                              double floor = 0.05);

// Binary latents and symbols, strictly positive tables.
LatentFactorModel random_latent_factor_model(int num_latent, int num_observed, Rng& rng,
                                             double floor = 0.1);

// Odometer increment over mixed radices; returns false after wrapping.
bool next_tuple(std::vector<int>& tuple, const std::vector<int>& cards);

// P(path) under the latent chain.
double hmm_path_prob(const HmmModel& model, const std::vector<int>& path);

// P(path, emissions at the observed positions). Missing positions carry -1.
double hmm_path_evidence_prob(const HmmModel& model, const std::vector<int>& path,
                              const std::vector<int>& symbols);

// P(Z_t = z, X_{o(t)} = x_{o(t)}) by summing over every latent prefix.
double hmm_alpha_bruteforce(const HmmModel& model, const std::vector<int>& symbols,
                            int t, int z);

// Exact posterior P(Z = . | X_o) over whole paths, by enumeration.
JointTable hmm_posterior_bruteforce(const HmmModel& model, const std::vector<int>& symbols);

// Marginal law of the emitted symbol sequence, by enumeration over paths.
JointTable hmm_symbol_law(const HmmModel& model);

// Marginal law of the observed vector of a latent factor model.
JointTable latent_factor_law(const LatentFactorModel& model);

// Strictly positive joint over (X_1..X_p, Y), entries 0.05 + uniform.
JointTable random_positive_joint(const std::vector<int>& cards, Rng& rng);

// Strictly positive joint where Y depends on X only through X_M.
JointTable planted_blanket_joint(int p, const std::vector<int>& blanket, Rng& rng);

}  // namespace mxmiss
