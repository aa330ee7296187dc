#include <doctest.h>

#include <cmath>
#include <vector>

#include "mxmiss/latent_gz.hpp"
#include "mxmiss/oracle.hpp"
#include "mxmiss/oracle_models.hpp"

using namespace mxmiss;

namespace {

MaskedSample sample_from(const std::vector<int>& symbols, const std::vector<bool>& mask) {
  return MaskedSample(std::vector<double>(symbols.begin(), symbols.end()), mask);
}

std::vector<int> pick_from(const JointTable& law, Choices& ch) {
  std::vector<double> weights;
  for (const auto& [_, p] : law.probabilities) weights.push_back(p);
  auto it = law.probabilities.begin();
  std::advance(it, ch.choose(weights));
  return it->first;
}

}  // namespace

TEST_CASE("latent posterior") {
  Rng rng(61);
  const LatentFactorModel model = random_latent_factor_model(2, 3, rng);
  model.validate();

  SUBCASE("nothing observed returns the prior") {
    const auto post = latent_posterior(model, sample_from({0, 0, 0}, {true, true, true}));
    for (int zi = 0; zi < model.latent_size(); ++zi)
      CHECK(post[zi] == doctest::Approx(model.latent_joint[zi]).epsilon(1e-12));
  }

  SUBCASE("matches a direct Bayes computation") {
    const MaskedSample sample = sample_from({1, 0, 1}, {false, true, false});
    const auto post = latent_posterior(model, sample);
    std::vector<double> expected(model.latent_size());
    double total = 0.0;
    for (int zi = 0; zi < model.latent_size(); ++zi) {
      expected[zi] =
          model.latent_joint[zi] * model.emission[0](zi, 1) * model.emission[2](zi, 1);
      total += expected[zi];
    }
    for (int zi = 0; zi < model.latent_size(); ++zi)
      CHECK(post[zi] == doctest::Approx(expected[zi] / total).epsilon(1e-12));
  }

  SUBCASE("point-mass emissions concentrate the posterior") {
    LatentFactorModel det;
    det.latent_card = {2};
    det.latent_joint = {0.4, 0.6};
    det.symbol_card = {2};
    det.emission = {Eigen::MatrixXd::Identity(2, 2)};
    const auto post = latent_posterior(det, sample_from({1}, {false}));
    CHECK(post[0] == doctest::Approx(0.0));
    CHECK(post[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("latent factor knockoffs are exactly swap-invariant") {
  Rng rng(67);
  const LatentFactorModel model = random_latent_factor_model(2, 3, rng);
  const JointTable x_law = latent_factor_law(model);

  SUBCASE("one fixed missing coordinate") {
    const JointTable pair_law = enumerate_pipeline_joint([&](Choices& ch) {
      const std::vector<int> x = pick_from(x_law, ch);
      const DiscretePair pair =
          gz_knockoffs(model, sample_from(x, {false, true, false}), ch);
      std::vector<int> out = pair.imputed;
      out.insert(out.end(), pair.knockoff.begin(), pair.knockoff.end());
      return out;
    });
    CHECK(check_pairwise_exchangeable(pair_law, 3) <= 1e-10);
  }

  SUBCASE("single latent coordinate collapses to one posterior resample") {
    const LatentFactorModel single = random_latent_factor_model(1, 2, rng);
    const JointTable law = latent_factor_law(single);
    const JointTable pair_law = enumerate_pipeline_joint([&](Choices& ch) {
      const std::vector<int> x = pick_from(law, ch);
      const DiscretePair pair = gz_knockoffs(single, sample_from(x, {false, false}), ch);
      std::vector<int> out = pair.imputed;
      out.insert(out.end(), pair.knockoff.begin(), pair.knockoff.end());
      return out;
    });
    CHECK(check_pairwise_exchangeable(pair_law, 2) <= 1e-10);
  }
}

TEST_CASE("sequential latent resampling reproduces the joint at every prefix") {
  // With complete data, after resampling coordinates 1..i the vector
  // (z'_{1:i}, z_hat_{i+1:L}, x) must have the law P(Z, X).
  Rng rng(71);
  const LatentFactorModel model = random_latent_factor_model(2, 2, rng);
  const JointTable x_law = latent_factor_law(model);

  JointTable zx_law;  // P(Z, X) directly from the model tables
  for (int zi = 0; zi < model.latent_size(); ++zi) {
    std::vector<int> z = model.unflatten_latent(zi);
    std::vector<int> x(model.num_observed(), 0);
    do {
      double prob = model.latent_joint[zi];
      for (int i = 0; i < model.num_observed(); ++i) prob *= model.emission[i](zi, x[i]);
      if (prob > 0.0) {
        std::vector<int> out = z;
        out.insert(out.end(), x.begin(), x.end());
        zx_law.probabilities[out] += prob;
      }
    } while (next_tuple(x, model.symbol_card));
  }

  for (int prefix = 0; prefix <= 2; ++prefix) {
    const JointTable law = enumerate_pipeline_joint([&](Choices& ch) {
      const std::vector<int> x = pick_from(x_law, ch);
      const auto post = latent_posterior(model, sample_from(x, {false, false}));
      std::vector<int> current = model.unflatten_latent(ch.choose(post));
      for (int i = 0; i < prefix; ++i) {
        std::vector<double> w(model.latent_card[i]);
        std::vector<int> probe = current;
        for (int v = 0; v < model.latent_card[i]; ++v) {
          probe[i] = v;
          const int flat = model.flatten_latent(probe);
          double weight = model.latent_joint[flat];
          for (int j = 0; j < model.num_observed(); ++j)
            weight *= model.emission[j](flat, x[j]);
          w[v] = weight;
        }
        current[i] = ch.choose(w);
      }
      std::vector<int> out = current;
      out.insert(out.end(), x.begin(), x.end());
      return out;
    });
    CHECK(tv_distance(law, zx_law) <= 1e-12);
  }
}

TEST_CASE("model validation guards the factored representation") {
  LatentFactorModel bad;
  bad.latent_card = {2};
  bad.latent_joint = {0.5, 0.5};
  bad.symbol_card = {2};
  bad.emission = {(Eigen::MatrixXd(2, 2) << 0.9, 0.2, 0.5, 0.5).finished()};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // row does not sum to 1

  bad.emission = {(Eigen::MatrixXd(1, 2) << 0.5, 0.5).finished()};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // wrong shape
}
