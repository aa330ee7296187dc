#include "mxmiss/oracle_models.hpp"

#include <cmath>

namespace mxmiss {

namespace {

Eigen::MatrixXd random_stochastic(int rows, int cols, Rng& rng, double floor) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double total = 0.0;
    for (int c = 0; c < cols; ++c) {
      m(r, c) = floor + rng.uniform();
      total += m(r, c);
    }
    m.row(r) /= total;
  }
  return m;
}

}  // namespace

HmmModel random_hmm(int length, int num_states, int num_symbols, Rng& rng, double floor) {
  HmmModel model;
  model.num_states = num_states;
  model.num_symbols = num_symbols;
  model.length = length;
  model.initial = random_stochastic(1, num_states, rng, floor).row(0).transpose();
  model.transition = {random_stochastic(num_states, num_states, rng, floor)};
  model.emission = {random_stochastic(num_states, num_symbols, rng, floor)};
  return model;
}

TableModel random_table_model(const std::vector<int>& cardinalities, Rng& rng,
                              double floor) {
  int n = 1;
  for (int c : cardinalities) n *= c;
  std::vector<double> prob(n);
  double total = 0.0;
  for (double& p : prob) {
    p = floor + rng.uniform();
    total += p;
  }
  for (double& p : prob) p /= total;
  return TableModel(cardinalities, std::move(prob));
}

LatentFactorModel random_latent_factor_model(int num_latent, int num_observed, Rng& rng,
                                             double floor) {
  LatentFactorModel model;
  model.latent_card.assign(num_latent, 2);
  model.symbol_card.assign(num_observed, 2);
  const int n = model.latent_size();
  model.latent_joint.resize(n);
  double total = 0.0;
  for (double& p : model.latent_joint) {
    p = floor + rng.uniform();
    total += p;
  }
  for (double& p : model.latent_joint) p /= total;
  for (int i = 0; i < num_observed; ++i)
    model.emission.push_back(random_stochastic(n, 2, rng, floor));
  return model;
}

bool next_tuple(std::vector<int>& tuple, const std::vector<int>& cards) {
  for (int k = static_cast<int>(tuple.size()) - 1; k >= 0; --k) {
    if (++tuple[k] < cards[k]) return true;
    tuple[k] = 0;
  }
  return false;
}

double hmm_path_prob(const HmmModel& model, const std::vector<int>& path) {
  double prob = model.initial[path[0]];
  for (std::size_t t = 1; t < path.size(); ++t)
    prob *= model.transition_into(static_cast<int>(t))(path[t - 1], path[t]);
  return prob;
}

double hmm_path_evidence_prob(const HmmModel& model, const std::vector<int>& path,
                              const std::vector<int>& symbols) {
  double prob = hmm_path_prob(model, path);
  for (std::size_t t = 0; t < path.size(); ++t)
    if (symbols[t] >= 0)
      prob *= model.emission_at(static_cast<int>(t))(path[t], symbols[t]);
  return prob;
}

double hmm_alpha_bruteforce(const HmmModel& model, const std::vector<int>& symbols,
                            int t, int z) {
  const std::vector<int> cards(t + 1, model.num_states);
  std::vector<int> prefix(t + 1, 0);
  double total = 0.0;
  do {
    if (prefix[t] != z) continue;
    double prob = model.initial[prefix[0]];
    for (int s = 1; s <= t; ++s) prob *= model.transition_into(s)(prefix[s - 1], prefix[s]);
    for (int s = 0; s <= t; ++s)
      if (symbols[s] >= 0) prob *= model.emission_at(s)(prefix[s], symbols[s]);
    total += prob;
  } while (next_tuple(prefix, cards));
  return total;
}

JointTable hmm_posterior_bruteforce(const HmmModel& model, const std::vector<int>& symbols) {
  const std::vector<int> cards(model.length, model.num_states);
  std::vector<int> path(model.length, 0);
  JointTable posterior;
  double evidence = 0.0;
  do {
    const double prob = hmm_path_evidence_prob(model, path, symbols);
    if (prob > 0.0) {
      posterior.probabilities[path] += prob;
      evidence += prob;
    }
  } while (next_tuple(path, cards));
  for (auto& [_, prob] : posterior.probabilities) prob /= evidence;
  return posterior;
}

JointTable hmm_symbol_law(const HmmModel& model) {
  const std::vector<int> path_cards(model.length, model.num_states);
  const std::vector<int> symbol_cards(model.length, model.num_symbols);
  JointTable law;
  std::vector<int> symbols(model.length, 0);
  do {
    std::vector<int> path(model.length, 0);
    double total = 0.0;
    do {
      total += hmm_path_evidence_prob(model, path, symbols);
    } while (next_tuple(path, path_cards));
    if (total > 0.0) law.probabilities[symbols] = total;
  } while (next_tuple(symbols, symbol_cards));
  return law;
}

JointTable latent_factor_law(const LatentFactorModel& model) {
  JointTable law;
  std::vector<int> x(model.num_observed(), 0);
  do {
    double total = 0.0;
    for (int zi = 0; zi < model.latent_size(); ++zi) {
      double prob = model.latent_joint[zi];
      for (int i = 0; i < model.num_observed(); ++i) prob *= model.emission[i](zi, x[i]);
      total += prob;
    }
    if (total > 0.0) law.probabilities[x] = total;
  } while (next_tuple(x, model.symbol_card));
  return law;
}

JointTable random_positive_joint(const std::vector<int>& cards, Rng& rng) {
  JointTable joint;
  std::vector<int> outcome(cards.size(), 0);
  double total = 0.0;
  do {
    const double p = 0.05 + rng.uniform();
    joint.probabilities[outcome] = p;
    total += p;
  } while (next_tuple(outcome, cards));
  for (auto& [_, p] : joint.probabilities) p /= total;
  return joint;
}

JointTable planted_blanket_joint(int p, const std::vector<int>& blanket, Rng& rng) {
  // P(x) strictly positive, P(y | x) a function of x_M only, bounded away
  // from 1/2 so the dependence on every blanket member is detectable.
  const std::vector<int> x_cards(p, 2);
  std::vector<double> p_x;
  {
    std::vector<int> x(p, 0);
    double total = 0.0;
    do {
      p_x.push_back(0.05 + rng.uniform());
      total += p_x.back();
    } while (next_tuple(x, x_cards));
    for (double& v : p_x) v /= total;
  }
  // P(y=1 | x_M) = 0.2 + sum_k c_k x_{M_k} with every c_k bounded away
  // from zero, so flipping any blanket member always moves the conditional.
  const int m = static_cast<int>(blanket.size());
  std::vector<double> coef(m);
  for (double& c : coef) c = (0.3 + 0.7 * rng.uniform()) * 0.6 / std::max(1, m);

  JointTable joint;
  std::vector<int> x(p, 0);
  std::size_t index = 0;
  do {
    double py = 0.2;
    for (int k = 0; k < m; ++k)
      if (x[blanket[k]]) py += coef[k];
    std::vector<int> out = x;
    out.push_back(0);
    joint.probabilities[out] = p_x[index] * (1.0 - py);
    out.back() = 1;
    joint.probabilities[out] = p_x[index] * py;
    ++index;
  } while (next_tuple(x, x_cards));
  return joint;
}

}  // namespace mxmiss
