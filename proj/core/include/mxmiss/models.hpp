#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mxmiss/masked_sample.hpp"
#include "mxmiss/rng.hpp"

namespace mxmiss {

// ---------------------------------------------------------------------------
// Multivariate normal model

struct MvnModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  int dim() const { return static_cast<int>(mean.size()); }

  // Symmetry within 1e-12, eigenvalues >= -1e-10.
  void validate() const;
};

// AR(1) Toeplitz covariance, Sigma_ij = rho^|i-j|. Requires 0 <= rho < 1;
// rho = 1 would be singular.
Eigen::MatrixXd make_ar1_covariance(int p, double rho);

// ---------------------------------------------------------------------------
// Hidden Markov model with categorical emissions

struct HmmModel {
  int num_states = 0;   // latent alphabet size K
  int num_symbols = 0;  // emission alphabet size K'
  int length = 0;       // chain length T
  Eigen::VectorXd initial;                  // K
  std::vector<Eigen::MatrixXd> transition;  // shared (size 1) or per step (T-1), K x K
  std::vector<Eigen::MatrixXd> emission;    // shared (size 1) or per step (T), K x K'

  // Transition into position t (from t-1), 1 <= t <= T-1.
  const Eigen::MatrixXd& transition_into(int t) const {
    return transition.size() == 1 ? transition[0] : transition[t - 1];
  }
  const Eigen::MatrixXd& emission_at(int t) const {
    return emission.size() == 1 ? emission[0] : emission[t];
  }

  // Rows stochastic within 1e-12, all entries nonnegative.
  void validate() const;

  // Marginal law of Z_t by forward marginalization.
  Eigen::VectorXd state_marginal(int t) const;

  // One latent path and its emissions.
  std::pair<std::vector<int>, std::vector<int>> simulate(Rng& rng) const;
};

// The 9-state chain used throughout the simulations: start in state 1,
// stay with 0.9 / advance cyclically with 0.1, and emit the own or next
// symbol with 0.35/2 each and any of the remaining seven with 0.65/7.
HmmModel make_nine_state_hmm(int length);

// ---------------------------------------------------------------------------
// Conditional-independence latent factor model

// Discrete latent vector Z with an explicit joint table and per-coordinate
// emissions P(X_i | Z). The factored representation makes the conditional
// independence of the X_i given Z hold by construction.
struct LatentFactorModel {
  std::vector<int> latent_card;            // cardinality per latent coordinate
  std::vector<double> latent_joint;        // row-major over the product space
  std::vector<int> symbol_card;            // cardinality per observed coordinate
  std::vector<Eigen::MatrixXd> emission;   // per coordinate: latent_size x symbol_card[i]

  int num_latent() const { return static_cast<int>(latent_card.size()); }
  int num_observed() const { return static_cast<int>(symbol_card.size()); }
  int latent_size() const;

  int flatten_latent(std::span<const int> z) const;
  std::vector<int> unflatten_latent(int index) const;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Response and missingness

struct ResponseModel {
  Eigen::VectorXd coefficients;  // beta*, amplitude on the support, 0 elsewhere
  double amplitude = 0.0;
  std::vector<int> support;  // S*
  double shift = 0.0;        // subtracted from covariates before the inner product

  static ResponseModel from_support(int p, std::span<const int> s_star,
                                    double amplitude, double shift = 0.0);
};

// Y ~ Bernoulli(sigmoid((x - shift)' beta*)).
int simulate_response(const Eigen::VectorXd& x, const ResponseModel& model, Rng& rng);

double sigmoid(double t);

enum class MaskCandidates { kTrueFeatures, kNullFeatures, kAll };

struct MissingnessSpec {
  double p0 = 0.0;  // probability that a candidate coordinate goes missing
  MaskCandidates mode = MaskCandidates::kAll;
};

// MCAR mask: coordinates in the candidate set M go missing independently
// with probability p0; coordinates outside M are always observed. M is
// resolved against S* by the candidate mode.
std::vector<bool> generate_mcar_mask(int p, const MissingnessSpec& spec,
                                     std::span<const int> s_star, Rng& rng);

std::vector<int> resolve_candidate_set(int p, MaskCandidates mode,
                                       std::span<const int> s_star);

}  // namespace mxmiss
