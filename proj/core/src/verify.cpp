#include "mxmiss/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mxmiss/hmm.hpp"
#include "mxmiss/latent_gz.hpp"
#include "mxmiss/oracle.hpp"
#include "mxmiss/oracle_models.hpp"
#include "mxmiss/pipelines.hpp"
#include "mxmiss/table_model.hpp"

namespace mxmiss {

namespace {

std::vector<bool> choose_mcar_mask(Choices& choices, int p, double p0) {
  std::vector<bool> mask(p, false);
  const double w[2] = {1.0 - p0, p0};
  for (int j = 0; j < p; ++j) mask[j] = choices.choose(w) == 1;
  return mask;
}

// Coordinate 0 stays observed and drives the missingness of the rest, so
// the mask law depends on the data only through always-observed values.
std::vector<bool> choose_mar_mask(Choices& choices, const std::vector<int>& x) {
  const int p = static_cast<int>(x.size());
  std::vector<bool> mask(p, false);
  for (int j = 1; j < p; ++j) {
    const double pj = (x[0] % 2 == 0) ? 0.45 : 0.15;
    const double w[2] = {1.0 - pj, pj};
    mask[j] = choices.choose(w) == 1;
  }
  return mask;
}

MaskedSample masked_from_ints(const std::vector<int>& x, std::vector<bool> mask) {
  std::vector<double> values(x.begin(), x.end());
  return MaskedSample(std::move(values), std::move(mask));
}

std::vector<int> choose_from_law(const JointTable& law, Choices& choices) {
  std::vector<double> weights;
  weights.reserve(law.probabilities.size());
  for (const auto& [_, p] : law.probabilities) weights.push_back(p);
  const int pick = choices.choose(weights);
  auto it = law.probabilities.begin();
  std::advance(it, pick);
  return it->first;
}

std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

CheckResult tv_check(std::string name, double statistic, double threshold,
                     std::string detail = {}) {
  CheckResult result;
  result.name = std::move(name);
  result.statistic = statistic;
  result.threshold = threshold;
  result.pass = statistic <= threshold;
  result.detail = std::move(detail);
  return result;
}

// ---------------------------------------------------------------------------
// Exchangeability pipelines

enum class MaskLaw { kMcar, kMar };

std::vector<bool> choose_mask(Choices& choices, MaskLaw law, const std::vector<int>& x,
                              double p0) {
  return law == MaskLaw::kMcar ? choose_mcar_mask(choices, static_cast<int>(x.size()), p0)
                               : choose_mar_mask(choices, x);
}

// Posterior imputation + sequential-pairs knockoffs on an explicit joint.
JointTable table_posterior_pair_law(const TableModel& model, MaskLaw law, double p0,
                                    bool broken_imputer = false) {
  return enumerate_pipeline_joint([&](Choices& choices) {
    const std::vector<int> x = model.sample(choices);
    const std::vector<bool> mask = choose_mask(choices, law, x, p0);
    const MaskedSample sample = masked_from_ints(x, mask);
    std::vector<int> x_hat;
    if (broken_imputer) {
      x_hat = x;
      for (int j = 0; j < model.dim(); ++j)
        if (mask[j]) x_hat[j] = choices.choose(model.marginal(j));
    } else {
      x_hat = model.impute_posterior(sample, choices);
    }
    const std::vector<int> x_tilde = model.scip_knockoff(x_hat, choices);
    return concat(x_hat, x_tilde);
  });
}

// Observed-block knockoffs + univariate imputation on an explicit joint.
JointTable table_univariate_pair_law(const TableModel& model, double p0) {
  return enumerate_pipeline_joint([&](Choices& choices) {
    const std::vector<int> x = model.sample(choices);
    const std::vector<bool> mask = choose_mcar_mask(choices, model.dim(), p0);
    std::vector<int> observed;
    for (int j = 0; j < model.dim(); ++j)
      if (!mask[j]) observed.push_back(j);

    std::vector<int> x_hat(model.dim()), x_tilde(model.dim());
    if (!observed.empty()) {
      const TableModel sub = model.marginal_on(observed);
      std::vector<int> x_o;
      for (int j : observed) x_o.push_back(x[j]);
      const std::vector<int> xt_o = sub.scip_knockoff(x_o, choices);
      for (std::size_t k = 0; k < observed.size(); ++k) {
        x_hat[observed[k]] = x_o[k];
        x_tilde[observed[k]] = xt_o[k];
      }
    }
    for (int j = 0; j < model.dim(); ++j) {
      if (!mask[j]) continue;
      const std::vector<double> marginal = model.marginal(j);
      x_hat[j] = choices.choose(marginal);
      x_tilde[j] = choices.choose(marginal);
    }
    return concat(x_hat, x_tilde);
  });
}

// Joint latent sampler for HMM data.
JointTable hmm_sesia_pair_law(const HmmModel& model, const JointTable& x_law, double p0) {
  return enumerate_pipeline_joint([&](Choices& choices) {
    const std::vector<int> x = choose_from_law(x_law, choices);
    const std::vector<bool> mask = choose_mcar_mask(choices, model.length, p0);
    const DiscretePair pair = modified_sesia_knockoffs(model, masked_from_ints(x, mask), choices);
    return concat(pair.imputed, pair.knockoff);
  });
}

// Posterior imputation first, then the latent-chain sampler on the
// completed vector.
JointTable hmm_posterior_pair_law(const HmmModel& model, const JointTable& x_law,
                                  MaskLaw law, double p0) {
  return enumerate_pipeline_joint([&](Choices& choices) {
    const std::vector<int> x = choose_from_law(x_law, choices);
    const std::vector<bool> mask = choose_mask(choices, law, x, p0);
    const MaskedSample sample = masked_from_ints(x, mask);

    std::vector<int> x_hat = x;
    const std::vector<int> missing = sample.missing_indices();
    if (!missing.empty()) {
      const AlphaTable alpha = forward_alpha(model, sample);
      const LatentPath z_hat = backward_sample_posterior(model, alpha, choices);
      const std::vector<int> draws = impute_emissions(model, z_hat, missing, choices);
      for (std::size_t k = 0; k < missing.size(); ++k) x_hat[missing[k]] = draws[k];
    }

    const MaskedSample complete =
        masked_from_ints(x_hat, std::vector<bool>(model.length, false));
    const DiscretePair pair = modified_sesia_knockoffs(model, complete, choices);
    return concat(x_hat, pair.knockoff);
  });
}

JointTable gz_pair_law(const LatentFactorModel& model, const JointTable& x_law, double p0) {
  return enumerate_pipeline_joint([&](Choices& choices) {
    const std::vector<int> x = choose_from_law(x_law, choices);
    const std::vector<bool> mask =
        choose_mcar_mask(choices, model.num_observed(), p0);
    const DiscretePair pair = gz_knockoffs(model, masked_from_ints(x, mask), choices);
    return concat(pair.imputed, pair.knockoff);
  });
}

}  // namespace

std::vector<CheckResult> verify_exchangeability() {
  std::vector<CheckResult> results;
  constexpr double kTol = 1e-10;
  constexpr double kMaskRate = 0.3;

  Rng rng = Rng::from_keys(0xE8C4A1);

  {
    const TableModel model = random_table_model({2, 3, 2}, rng);
    results.push_back(tv_check(
        "posterior pipeline swap-invariance (table model, MCAR)",
        check_pairwise_exchangeable(table_posterior_pair_law(model, MaskLaw::kMcar, kMaskRate), 3),
        kTol));
    results.push_back(tv_check(
        "posterior pipeline swap-invariance (table model, MAR)",
        check_pairwise_exchangeable(table_posterior_pair_law(model, MaskLaw::kMar, kMaskRate), 3),
        kTol));
    results.push_back(tv_check(
        "univariate pipeline swap-invariance (table model, MCAR)",
        check_pairwise_exchangeable(table_univariate_pair_law(model, kMaskRate), 3), kTol));

    const TableModel two = random_table_model({3, 3}, rng);
    results.push_back(tv_check(
        "posterior pipeline swap-invariance (2-coordinate table, MCAR)",
        check_pairwise_exchangeable(table_posterior_pair_law(two, MaskLaw::kMcar, kMaskRate), 2),
        kTol));
    results.push_back(tv_check(
        "univariate pipeline swap-invariance (2-coordinate table, MCAR)",
        check_pairwise_exchangeable(table_univariate_pair_law(two, kMaskRate), 2), kTol));

    // A broken imputer (independent marginals instead of the posterior)
    // must be caught by the swap-invariance certificate.
    const double broken =
        check_pairwise_exchangeable(table_posterior_pair_law(model, MaskLaw::kMcar, kMaskRate,
                                                             /*broken_imputer=*/true),
                                    3);
    CheckResult mutation;
    mutation.name = "mutation detection (marginal imputer breaks swap-invariance)";
    mutation.statistic = broken;
    mutation.threshold = 0.01;
    mutation.pass = broken > 0.01;
    mutation.detail = "statistic must exceed the threshold";
    results.push_back(mutation);
  }

  {
    const HmmModel hmm = random_hmm(3, 2, 2, rng);
    const JointTable x_law = hmm_symbol_law(hmm);
    results.push_back(tv_check(
        "hmm joint sampler swap-invariance (T=3, K=2, MCAR)",
        check_pairwise_exchangeable(hmm_sesia_pair_law(hmm, x_law, kMaskRate), 3), kTol));
    results.push_back(tv_check(
        "posterior + hmm sampler swap-invariance (T=3, K=2, MCAR)",
        check_pairwise_exchangeable(hmm_posterior_pair_law(hmm, x_law, MaskLaw::kMcar, kMaskRate), 3),
        kTol));
    results.push_back(tv_check(
        "posterior + hmm sampler swap-invariance (T=3, K=2, MAR)",
        check_pairwise_exchangeable(hmm_posterior_pair_law(hmm, x_law, MaskLaw::kMar, kMaskRate), 3),
        kTol));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const LatentFactorModel model = random_latent_factor_model(2, 3, rng);
      const JointTable x_law = latent_factor_law(model);
      worst = std::max(worst,
                       check_pairwise_exchangeable(gz_pair_law(model, x_law, kMaskRate), 3));
    }
    results.push_back(tv_check(
        "latent factor sampler swap-invariance (20 random models, MCAR)", worst, kTol));
  }
  return results;
}

std::vector<CheckResult> verify_mar() {
  std::vector<CheckResult> results;
  constexpr double kTol = 1e-12;
  constexpr double kMaskRate = 0.35;
  Rng rng = Rng::from_keys(0x3A21);

  const auto imputed_law = [&](const TableModel& model, MaskLaw law, bool broken) {
    return enumerate_pipeline_joint([&](Choices& choices) {
      const std::vector<int> x = model.sample(choices);
      const std::vector<bool> mask = choose_mask(choices, law, x, kMaskRate);
      if (!broken) return model.impute_posterior(masked_from_ints(x, mask), choices);
      std::vector<int> x_hat = x;
      for (int j = 0; j < model.dim(); ++j)
        if (mask[j]) x_hat[j] = choices.choose(model.marginal(j));
      return x_hat;
    });
  };

  const TableModel model = random_table_model({2, 2, 3}, rng);
  const JointTable law_x = model.as_joint_table();
  results.push_back(tv_check("imputed law equals data law (table model, MCAR)",
                             check_distribution_preserved(law_x, imputed_law(model, MaskLaw::kMcar, false)),
                             kTol));
  results.push_back(tv_check("imputed law equals data law (table model, MAR)",
                             check_distribution_preserved(law_x, imputed_law(model, MaskLaw::kMar, false)),
                             kTol));

  {
    const double broken =
        check_distribution_preserved(law_x, imputed_law(model, MaskLaw::kMcar, true));
    CheckResult mutation;
    mutation.name = "mutation detection (marginal imputer shifts the law)";
    mutation.statistic = broken;
    mutation.threshold = 0.01;
    mutation.pass = broken > 0.01;
    mutation.detail = "statistic must exceed the threshold";
    results.push_back(mutation);
  }

  {
    const HmmModel hmm = random_hmm(3, 2, 2, rng);
    const JointTable x_law = hmm_symbol_law(hmm);
    const JointTable law = enumerate_pipeline_joint([&](Choices& choices) {
      const std::vector<int> x = choose_from_law(x_law, choices);
      const std::vector<bool> mask = choose_mcar_mask(choices, hmm.length, kMaskRate);
      const DiscretePair pair =
          modified_sesia_knockoffs(hmm, masked_from_ints(x, mask), choices);
      return pair.imputed;
    });
    results.push_back(tv_check("imputed law equals data law (hmm sampler, MCAR)",
                               check_distribution_preserved(x_law, law), kTol));
  }

  {
    const LatentFactorModel lf = random_latent_factor_model(2, 3, rng);
    const JointTable x_law = latent_factor_law(lf);
    const JointTable law = enumerate_pipeline_joint([&](Choices& choices) {
      const std::vector<int> x = choose_from_law(x_law, choices);
      const std::vector<bool> mask = choose_mcar_mask(choices, lf.num_observed(), kMaskRate);
      const DiscretePair pair = gz_knockoffs(lf, masked_from_ints(x, mask), choices);
      return pair.imputed;
    });
    results.push_back(tv_check("imputed law equals data law (latent factor sampler, MCAR)",
                               check_distribution_preserved(x_law, law), kTol));
  }
  return results;
}

std::vector<CheckResult> verify_posterior() {
  std::vector<CheckResult> results;
  Rng rng = Rng::from_keys(0x90D5);

  const int shapes[][2] = {{2, 3}, {3, 2}, {4, 3}, {5, 2}};
  const int symbol_counts[] = {3, 2, 2, 3};

  double worst_alpha = 0.0;
  double worst_path_tv = 0.0;
  for (int s = 0; s < 4; ++s) {
    const int t_len = shapes[s][0];
    const int k = shapes[s][1];
    const HmmModel model = random_hmm(t_len, k, symbol_counts[s], rng);

    for (int trial = 0; trial < 3; ++trial) {
      std::vector<int> symbols(t_len);
      std::vector<bool> mask(t_len);
      for (int t = 0; t < t_len; ++t) {
        mask[t] = trial == 1 ? true : (trial == 2 ? false : rng.bernoulli(0.4));
        symbols[t] = mask[t] ? -1 : rng.uniform_int(symbol_counts[s]);
      }
      std::vector<double> values(symbols.begin(), symbols.end());
      const MaskedSample sample(std::move(values), mask);

      const AlphaTable alpha = forward_alpha(model, sample);
      for (int t = 0; t < t_len; ++t)
        for (int z = 0; z < k; ++z)
          worst_alpha = std::max(worst_alpha,
                                 std::abs(alpha.value(t, z) -
                                          hmm_alpha_bruteforce(model, symbols, t, z)));

      const JointTable sampled = enumerate_pipeline_joint([&](Choices& choices) {
        return backward_sample_posterior(model, alpha, choices);
      });
      worst_path_tv = std::max(
          worst_path_tv, tv_distance(sampled, hmm_posterior_bruteforce(model, symbols)));
    }
  }
  results.push_back(tv_check("forward table equals path enumeration", worst_alpha, 1e-12));
  results.push_back(
      tv_check("backward-sampled path law equals exact posterior", worst_path_tv, 1e-10));
  return results;
}

std::vector<CheckResult> verify_mse(std::uint64_t seed) {
  std::vector<CheckResult> results;
  Rng rng = Rng::from_keys(seed);
  constexpr int kModels = 20;
  constexpr int kSamples = 4000;

  double worst_order = -1e300;     // mse_posterior - (mse_univariate + 4 se)
  double worst_post_gap = -1e300;  // |mc - analytic| - 4 se
  double worst_uni_gap = -1e300;
  for (int m = 0; m < kModels; ++m) {
    const int p = 2 + rng.uniform_int(5);
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) a(i, j) = rng.gaussian();
    MvnModel model;
    model.mean = Eigen::VectorXd::Zero(p);
    model.covariance = a * a.transpose() / p + 0.3 * Eigen::MatrixXd::Identity(p, p);
    const int target = rng.uniform_int(p);

    Rng mc_rng = rng.split(100 + m);
    const MseReport report = mse_compare(model, target, kSamples, mc_rng);
    const double se_comb =
        std::sqrt(report.se_posterior * report.se_posterior +
                  report.se_univariate * report.se_univariate);
    worst_order = std::max(worst_order,
                           report.mse_posterior - report.mse_univariate - 4.0 * se_comb);
    worst_post_gap =
        std::max(worst_post_gap, std::abs(report.mse_posterior - report.analytic_posterior) -
                                     4.0 * report.se_posterior);
    worst_uni_gap =
        std::max(worst_uni_gap, std::abs(report.mse_univariate - report.analytic_univariate) -
                                    4.0 * report.se_univariate);
  }
  results.push_back(tv_check("posterior imputation MSE never exceeds univariate",
                             worst_order, 0.0, "worst excess over 4 combined SEs"));
  results.push_back(tv_check("posterior MSE matches closed form", worst_post_gap, 0.0,
                             "worst |MC - analytic| excess over 4 SEs"));
  results.push_back(tv_check("univariate MSE matches closed form", worst_uni_gap, 0.0,
                             "worst |MC - analytic| excess over 4 SEs"));
  return results;
}

std::vector<CheckResult> verify_markov_blanket(std::uint64_t seed, int num_models) {
  std::vector<CheckResult> results;
  Rng rng = Rng::from_keys(seed);

  int mismatches = 0;
  for (int m = 0; m < num_models; ++m) {
    const int p = 2 + rng.uniform_int(3);
    JointTable joint;
    if (m % 2 == 0) {
      std::vector<int> cards(p + 1, 2);
      joint = random_positive_joint(cards, rng);
    } else {
      const int blanket_size = rng.uniform_int(p + 1);
      std::vector<int> all(p);
      for (int j = 0; j < p; ++j) all[j] = j;
      for (int i = 0; i < blanket_size; ++i)
        std::swap(all[i], all[i + rng.uniform_int(p - i)]);
      std::vector<int> blanket(all.begin(), all.begin() + blanket_size);
      std::sort(blanket.begin(), blanket.end());
      joint = planted_blanket_joint(p, blanket, rng);
    }
    if (markov_blanket_bruteforce(joint) != pairwise_dependent_set(joint)) ++mismatches;
  }
  CheckResult check;
  check.name = "markov blanket equals pairwise conditional-dependence set";
  check.statistic = mismatches;
  check.threshold = 0.0;
  check.pass = mismatches == 0;
  std::ostringstream detail;
  detail << num_models << " random strictly positive joints";
  check.detail = detail.str();
  results.push_back(check);
  return results;
}

std::vector<CheckResult> run_verification_suite(const std::string& suite) {
  std::vector<CheckResult> results;
  const auto append = [&](std::vector<CheckResult> more) {
    for (auto& r : more) results.push_back(std::move(r));
  };
  if (suite == "exchangeability" || suite == "all") append(verify_exchangeability());
  if (suite == "mar" || suite == "all") append(verify_mar());
  if (suite == "posterior" || suite == "all") append(verify_posterior());
  if (suite == "mse" || suite == "all") append(verify_mse());
  if (suite == "mb" || suite == "all") append(verify_markov_blanket());
  if (results.empty())
    throw std::invalid_argument("unknown verification suite '" + suite + "'");
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace mxmiss
