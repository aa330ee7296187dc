#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "mxmiss/masked_sample.hpp"
#include "mxmiss/models.hpp"
#include "mxmiss/rng.hpp"

namespace mxmiss {

struct SingularObservedBlock : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// P(X_m | X_o = x_o) for a Gaussian model: mean and covariance over the
// missing coordinates, in the order given by `target`.
struct GaussianConditional {
  std::vector<int> target;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// mean = mu_m + S_mo S_oo^{-1} (x_o - mu_o), cov = S_mm - S_mo S_oo^{-1} S_om.
// With nothing observed this is the unconditional marginal over m. A failed
// factorization of S_oo is retried once with diagonal jitter
// 1e-10 * trace(S_oo)/|o|, then signalled as SingularObservedBlock.
GaussianConditional mvn_condition(const MvnModel& model, const MaskedSample& sample);

// Draw from N(mean, covariance). Degenerate covariances are handled by
// eigenvalue clamping; |m| standard normals are always consumed so the
// stream position does not depend on the conditioning pattern.
Eigen::VectorXd sample_conditional(const GaussianConditional& cond, Rng& rng);

struct ScalarMoments {
  double mean = 0.0;
  double variance = 0.0;
};

ScalarMoments mvn_marginal(const MvnModel& model, int j);

// Exact Gaussian model-X knockoffs with the closed-form equicorrelated
// diagonal: on the correlation scale s_j = min(2 lambda_min, 1) for all j,
// rescaled to the covariance scale. X_tilde | X = x is
// N(mu + (I - D S^{-1})(x - mu), 2D - D S^{-1} D) with D = diag(s).
class GaussianKnockoffSampler {
 public:
  static GaussianKnockoffSampler build(const MvnModel& model);

  Eigen::VectorXd sample(const Eigen::VectorXd& x, Rng& rng) const;

  const Eigen::VectorXd& s_vector() const { return s_; }
  const Eigen::MatrixXd& conditional_mean_map() const { return mean_map_; }
  const Eigen::MatrixXd& conditional_cov() const { return cond_cov_; }

  // Joint covariance [[S, S-D], [S-D, S]] of (X, X_tilde).
  Eigen::MatrixXd joint_covariance() const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd mean_map_;  // I - D S^{-1}
  Eigen::MatrixXd cond_cov_;  // 2D - D S^{-1} D
  Eigen::MatrixXd cond_sqrt_;
};

GaussianKnockoffSampler build_gaussian_knockoff_sampler(const MvnModel& model);
Eigen::VectorXd sample_gaussian_knockoff(const GaussianKnockoffSampler& sampler,
                                         const Eigen::VectorXd& x, Rng& rng);

// Square factor B with B B^T = A for symmetric PSD A, clamping eigenvalues
// below `floor` to zero. Throws NotPositiveDefinite when an eigenvalue is
// materially negative.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a, double floor = 1e-8);

// One draw X ~ N(mu, Sigma).
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol_lower,
                           Rng& rng);

}  // namespace mxmiss
