#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mxmiss {

struct CheckResult {
  std::string name;
  double statistic = 0.0;  // max TV / max violation observed
  double threshold = 0.0;  // pass when statistic <= threshold
  bool pass = false;
  std::string detail;
};

// Exact swap-invariance of (X_hat, X_tilde) for every swap set, on
// enumerable discrete models: the posterior and univariate pipelines on
// generic table models, the modified HMM sampler, the posterior pipeline
// with the HMM sampler, and the latent factor sampler. MCAR masks
// throughout, plus a MAR mask law for the posterior pipeline. Includes a
// mutation check that must fail.
std::vector<CheckResult> verify_exchangeability();

// Law of the posterior-imputed vector equals the law of X under MCAR and
// under a MAR mask law, on enumerable models; the marginal-imputation
// mutation must be detected.
std::vector<CheckResult> verify_mar();

// Forward table against path enumeration, and the backward-sampled path
// law against brute-force Bayes posteriors, on a battery of small models.
std::vector<CheckResult> verify_posterior();

// Monte Carlo + closed-form imputation MSE comparison on random Gaussian
// models: posterior never beats univariate by being larger.
std::vector<CheckResult> verify_mse(std::uint64_t seed = 7);

// Exhaustive Markov blanket equals the pairwise conditional-dependence set
// on random strictly positive joints.
std::vector<CheckResult> verify_markov_blanket(std::uint64_t seed = 11, int num_models = 50);

// Dispatch by suite name: exchangeability, mar, posterior, mse, mb, all.
std::vector<CheckResult> run_verification_suite(const std::string& suite);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace mxmiss
