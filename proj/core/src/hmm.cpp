#include "mxmiss/hmm.hpp"

#include <cmath>

namespace mxmiss {

std::vector<int> symbols_of(const MaskedSample& sample) {
  std::vector<int> symbols(sample.size(), -1);
  for (std::size_t t = 0; t < sample.size(); ++t)
    if (!sample.missing[t]) symbols[t] = static_cast<int>(sample.values[t]);
  return symbols;
}

AlphaTable forward_alpha(const HmmModel& model, const MaskedSample& sample) {
  const int t_len = model.length;
  const int k = model.num_states;
  if (static_cast<int>(sample.size()) != t_len)
    throw std::invalid_argument("forward_alpha: sample length mismatch");
  const std::vector<int> symbols = symbols_of(sample);
  for (int t = 0; t < t_len; ++t)
    if (symbols[t] >= model.num_symbols)
      throw std::out_of_range("forward_alpha: observed symbol outside emission support");

  AlphaTable alpha;
  alpha.scaled.resize(t_len, k);
  alpha.log_norm.resize(t_len);

  Eigen::VectorXd row(k);
  double cum_log = 0.0;
  for (int t = 0; t < t_len; ++t) {
    if (t == 0) {
      row = model.initial;
    } else {
      row = model.transition_into(t).transpose() * alpha.scaled.row(t - 1).transpose();
    }
    if (!sample.missing[t]) {
      const auto& e = model.emission_at(t);
      for (int z = 0; z < k; ++z) row[z] *= e(z, symbols[t]);
    }
    const double norm = row.sum();
    if (!(norm > 0.0))
      throw ZeroEvidence("forward_alpha: observed sequence has probability zero");
    cum_log += std::log(norm);
    alpha.scaled.row(t) = row.transpose() / norm;
    alpha.log_norm(t) = cum_log;
  }
  return alpha;
}

LatentPath backward_sample_posterior(const HmmModel& model, const AlphaTable& alpha,
                                     Choices& choices) {
  const int t_len = alpha.length();
  const int k = alpha.num_states();
  LatentPath path(t_len);
  std::vector<double> w(k);
  for (int t = t_len - 1; t >= 0; --t) {
    if (t == t_len - 1) {
      for (int z = 0; z < k; ++z) w[z] = alpha.scaled(t, z);
    } else {
      const auto& a = model.transition_into(t + 1);
      for (int z = 0; z < k; ++z) w[z] = a(z, path[t + 1]) * alpha.scaled(t, z);
    }
    path[t] = choices.choose(w);
  }
  return path;
}

LatentPath backward_sample_posterior(const HmmModel& model, const AlphaTable& alpha,
                                     Rng& rng) {
  RandomChoices choices(rng);
  return backward_sample_posterior(model, alpha, choices);
}

std::vector<int> impute_emissions(const HmmModel& model, const LatentPath& path,
                                  std::span<const int> positions, Choices& choices) {
  std::vector<int> symbols;
  symbols.reserve(positions.size());
  std::vector<double> w(model.num_symbols);
  for (int t : positions) {
    const auto& e = model.emission_at(t);
    for (int s = 0; s < model.num_symbols; ++s) w[s] = e(path[t], s);
    symbols.push_back(choices.choose(w));
  }
  return symbols;
}

std::vector<int> impute_emissions(const HmmModel& model, const LatentPath& path,
                                  std::span<const int> positions, Rng& rng) {
  RandomChoices choices(rng);
  return impute_emissions(model, path, positions, choices);
}

// Sequential conditional independent pairs on the chain. At position j the
// conditional of Z_j given the rest of the original path and the knockoffs
// drawn so far reduces to
//   u_j(k) ~ Q_j(k | z_{j-1}) Q_j(k | z'_{j-1}) Q_{j+1}(z_{j+1} | k) / n_{j-1}(k)
// with the normalizer function updated as
//   n_j(k') = sum_k Q_j(k | z_{j-1}) Q_j(k | z'_{j-1}) Q_{j+1}(k' | k) / n_{j-1}(k).
// A numerator of zero short-circuits the division; a positive numerator
// implies n_{j-1}(k) > 0 on every reachable input.
LatentPath sample_markov_knockoff(const HmmModel& model, const LatentPath& z,
                                  Choices& choices) {
  const int t_len = static_cast<int>(z.size());
  const int k = model.num_states;
  LatentPath z_tilde(t_len);
  std::vector<double> n_prev(k, 1.0), n_next(k), u(k), base(k);

  for (int j = 0; j < t_len; ++j) {
    for (int s = 0; s < k; ++s) {
      double num = (j == 0) ? model.initial[s]
                            : model.transition_into(j)(z[j - 1], s) *
                                  model.transition_into(j)(z_tilde[j - 1], s);
      base[s] = num;
      if (j + 1 < t_len) num *= model.transition_into(j + 1)(s, z[j + 1]);
      if (num <= 0.0) {
        u[s] = 0.0;
      } else {
        if (n_prev[s] <= 0.0)
          throw std::logic_error("sample_markov_knockoff: unreachable input path");
        u[s] = num / n_prev[s];
      }
    }
    z_tilde[j] = choices.choose(u);

    if (j + 1 < t_len) {
      const auto& a_next = model.transition_into(j + 1);
      for (int kp = 0; kp < k; ++kp) n_next[kp] = 0.0;
      for (int s = 0; s < k; ++s) {
        if (base[s] <= 0.0) continue;
        const double scale = base[s] / n_prev[s];
        for (int kp = 0; kp < k; ++kp) n_next[kp] += scale * a_next(s, kp);
      }
      // Rescaling n multiplies every subsequent weight vector uniformly and
      // cancels in the sampling probabilities; it only prevents drift.
      double peak = 0.0;
      for (int kp = 0; kp < k; ++kp) peak = std::max(peak, n_next[kp]);
      if (peak > 0.0)
        for (int kp = 0; kp < k; ++kp) n_next[kp] /= peak;
      n_prev = n_next;
    }
  }
  return z_tilde;
}

LatentPath sample_markov_knockoff(const HmmModel& model, const LatentPath& z, Rng& rng) {
  RandomChoices choices(rng);
  return sample_markov_knockoff(model, z, choices);
}

DiscretePair modified_sesia_knockoffs(const HmmModel& model, const MaskedSample& sample,
                                      Choices& choices) {
  const AlphaTable alpha = forward_alpha(model, sample);
  const LatentPath z_hat = backward_sample_posterior(model, alpha, choices);

  DiscretePair pair;
  pair.imputed = symbols_of(sample);
  const std::vector<int> missing = sample.missing_indices();
  const std::vector<int> imputed_symbols = impute_emissions(model, z_hat, missing, choices);
  for (std::size_t i = 0; i < missing.size(); ++i)
    pair.imputed[missing[i]] = imputed_symbols[i];

  const LatentPath z_prime = sample_markov_knockoff(model, z_hat, choices);

  std::vector<int> all_positions(model.length);
  for (int t = 0; t < model.length; ++t) all_positions[t] = t;
  pair.knockoff = impute_emissions(model, z_prime, all_positions, choices);
  return pair;
}

DiscretePair modified_sesia_knockoffs(const HmmModel& model, const MaskedSample& sample,
                                      Rng& rng) {
  RandomChoices choices(rng);
  return modified_sesia_knockoffs(model, sample, choices);
}

Eigen::VectorXd hmm_univariate_marginal(const HmmModel& model, int t) {
  if (t < 0 || t >= model.length)
    throw std::out_of_range("hmm_univariate_marginal: position out of range");
  const Eigen::VectorXd pz = model.state_marginal(t);
  return model.emission_at(t).transpose() * pz;
}

}  // namespace mxmiss
