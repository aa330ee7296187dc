#include "mxmiss/latent_gz.hpp"

#include <cmath>

namespace mxmiss {

std::vector<double> latent_posterior(const LatentFactorModel& model,
                                     const MaskedSample& sample) {
  if (static_cast<int>(sample.size()) != model.num_observed())
    throw std::invalid_argument("latent_posterior: sample length mismatch");
  const int n = model.latent_size();
  const std::vector<int> observed = sample.observed_indices();
  std::vector<double> post(n);
  double total = 0.0;
  for (int zi = 0; zi < n; ++zi) {
    double w = model.latent_joint[zi];
    for (int i : observed) w *= model.emission[i](zi, static_cast<int>(sample.values[i]));
    post[zi] = w;
    total += w;
  }
  if (!(total > 0.0))
    throw ZeroEvidence("latent_posterior: observed values have probability zero");
  for (double& w : post) w /= total;
  return post;
}

DiscretePair gz_knockoffs(const LatentFactorModel& model, const MaskedSample& sample,
                          Choices& choices) {
  const int num_latent = model.num_latent();
  const int p = model.num_observed();

  const std::vector<double> post = latent_posterior(model, sample);
  std::vector<int> z_hat = model.unflatten_latent(choices.choose(post));

  DiscretePair pair;
  pair.imputed.resize(p);
  const int z_hat_flat = model.flatten_latent(z_hat);
  for (int i = 0; i < p; ++i) {
    if (sample.missing[i]) {
      std::vector<double> w(model.symbol_card[i]);
      for (int s = 0; s < model.symbol_card[i]; ++s) w[s] = model.emission[i](z_hat_flat, s);
      pair.imputed[i] = choices.choose(w);
    } else {
      pair.imputed[i] = static_cast<int>(sample.values[i]);
    }
  }

  // Resample the latent coordinates in order; after step i the working
  // vector holds (z'_{1:i}, z_hat_{i+1:L}).
  std::vector<int> current = z_hat;
  for (int i = 0; i < num_latent; ++i) {
    std::vector<double> w(model.latent_card[i]);
    for (int v = 0; v < model.latent_card[i]; ++v) {
      current[i] = v;
      const int flat = model.flatten_latent(current);
      double weight = model.latent_joint[flat];
      for (int j = 0; j < p; ++j) weight *= model.emission[j](flat, pair.imputed[j]);
      w[v] = weight;
    }
    current[i] = choices.choose(w);
  }

  const int z_prime_flat = model.flatten_latent(current);
  pair.knockoff.resize(p);
  for (int i = 0; i < p; ++i) {
    std::vector<double> w(model.symbol_card[i]);
    for (int s = 0; s < model.symbol_card[i]; ++s) w[s] = model.emission[i](z_prime_flat, s);
    pair.knockoff[i] = choices.choose(w);
  }
  return pair;
}

DiscretePair gz_knockoffs(const LatentFactorModel& model, const MaskedSample& sample,
                          Rng& rng) {
  RandomChoices choices(rng);
  return gz_knockoffs(model, sample, choices);
}

std::vector<double> latent_factor_marginal(const LatentFactorModel& model, int coord) {
  std::vector<double> marginal(model.symbol_card[coord], 0.0);
  for (int zi = 0; zi < model.latent_size(); ++zi)
    for (int s = 0; s < model.symbol_card[coord]; ++s)
      marginal[s] += model.latent_joint[zi] * model.emission[coord](zi, s);
  return marginal;
}

}  // namespace mxmiss
