#include "mxmiss/table_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mxmiss/hmm.hpp"

namespace mxmiss {

namespace {

int flatten_with(std::span<const int> dims, std::span<const int> x) {
  int index = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) index = index * dims[k] + x[k];
  return index;
}

}  // namespace

TableModel::TableModel(std::vector<int> cardinalities, std::vector<double> probabilities)
    : card_(std::move(cardinalities)), prob_(std::move(probabilities)) {
  int n = 1;
  for (int c : card_) {
    if (c < 1) throw std::invalid_argument("TableModel: cardinality must be positive");
    n *= c;
  }
  if (static_cast<int>(prob_.size()) != n)
    throw std::invalid_argument("TableModel: probability size mismatch");
  double total = 0.0;
  for (double p : prob_) {
    if (p < 0.0) throw std::invalid_argument("TableModel: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("TableModel: probabilities must sum to 1");
}

int TableModel::flatten(std::span<const int> x) const { return flatten_with(card_, x); }

std::vector<int> TableModel::unflatten(int index) const {
  std::vector<int> x(card_.size());
  for (int k = static_cast<int>(card_.size()) - 1; k >= 0; --k) {
    x[k] = index % card_[k];
    index /= card_[k];
  }
  return x;
}

double TableModel::prob(std::span<const int> x) const { return prob_[flatten(x)]; }

std::vector<double> TableModel::marginal(int coord) const {
  std::vector<double> m(card_[coord], 0.0);
  for (std::size_t i = 0; i < prob_.size(); ++i)
    m[unflatten(static_cast<int>(i))[coord]] += prob_[i];
  return m;
}

std::vector<int> TableModel::sample(Choices& choices) const {
  return unflatten(choices.choose(prob_));
}

std::vector<int> TableModel::impute_posterior(const MaskedSample& sample,
                                              Choices& choices) const {
  if (static_cast<int>(sample.size()) != dim())
    throw std::invalid_argument("TableModel: sample length mismatch");
  const std::vector<int> missing = sample.missing_indices();
  std::vector<int> x(dim());
  for (int j = 0; j < dim(); ++j)
    x[j] = sample.missing[j] ? 0 : static_cast<int>(sample.values[j]);
  if (missing.empty()) return x;

  // All completions in odometer order over the missing coordinates.
  int count = 1;
  for (int j : missing) count *= card_[j];
  std::vector<double> w(count);
  std::vector<int> completion(missing.size(), 0);
  for (int c = 0; c < count; ++c) {
    int rem = c;
    for (int k = static_cast<int>(missing.size()) - 1; k >= 0; --k) {
      completion[k] = rem % card_[missing[k]];
      rem /= card_[missing[k]];
    }
    for (std::size_t k = 0; k < missing.size(); ++k) x[missing[k]] = completion[k];
    w[c] = prob(x);
  }
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0))
    throw ZeroEvidence("TableModel: observed values have probability zero");
  int pick = choices.choose(w);
  for (int k = static_cast<int>(missing.size()) - 1; k >= 0; --k) {
    x[missing[k]] = pick % card_[missing[k]];
    pick /= card_[missing[k]];
  }
  return x;
}

std::vector<int> TableModel::scip_knockoff(std::span<const int> x, Choices& choices) const {
  const int p = dim();
  // Working joint over (X_1..X_p, Xt_1..Xt_i), extended one knockoff
  // coordinate per step.
  std::vector<int> dims = card_;
  std::vector<double> table = prob_;
  std::vector<int> x_tilde(p);

  std::vector<int> point(x.begin(), x.end());
  for (int i = 0; i < p; ++i) {
    // Conditional of X_i given the other originals and knockoffs so far.
    std::vector<int> probe = point;
    for (int k = 0; k < i; ++k) probe.push_back(x_tilde[k]);
    std::vector<double> w(card_[i]);
    for (int v = 0; v < card_[i]; ++v) {
      probe[i] = v;
      w[v] = table[flatten_with(dims, probe)];
    }
    x_tilde[i] = choices.choose(w);

    if (i + 1 == p) break;

    // Extend the joint with Xt_i: T'(x, xt_{1:i}) =
    //   T(x, xt_{1:i-1}) * T(x with x_i := xt_i, xt_{1:i-1}) / sum_v T(x with x_i := v, ...).
    std::vector<int> new_dims = dims;
    new_dims.push_back(card_[i]);
    int new_size = 1;
    for (int d : new_dims) new_size *= d;
    std::vector<double> extended(new_size, 0.0);
    std::vector<int> idx(dims.size(), 0);
    const int old_size = static_cast<int>(table.size());
    for (int flat = 0; flat < old_size; ++flat) {
      int rem = flat;
      for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
        idx[k] = rem % dims[k];
        rem /= dims[k];
      }
      const double base = table[flat];
      if (base <= 0.0) continue;
      std::vector<int> var = idx;
      double denom = 0.0;
      std::vector<double> nums(card_[i]);
      for (int v = 0; v < card_[i]; ++v) {
        var[i] = v;
        nums[v] = table[flatten_with(dims, var)];
        denom += nums[v];
      }
      for (int v = 0; v < card_[i]; ++v) {
        if (nums[v] <= 0.0) continue;
        std::vector<int> full = idx;
        full.push_back(v);
        extended[flatten_with(new_dims, full)] = base * nums[v] / denom;
      }
    }
    dims = std::move(new_dims);
    table = std::move(extended);
  }
  return x_tilde;
}

TableModel TableModel::marginal_on(std::span<const int> coords) const {
  std::vector<int> sub_card;
  for (int j : coords) sub_card.push_back(card_[j]);
  int n = 1;
  for (int c : sub_card) n *= c;
  std::vector<double> sub_prob(n, 0.0);
  std::vector<int> sub(coords.size());
  for (std::size_t i = 0; i < prob_.size(); ++i) {
    const std::vector<int> x = unflatten(static_cast<int>(i));
    for (std::size_t k = 0; k < coords.size(); ++k) sub[k] = x[coords[k]];
    sub_prob[flatten_with(sub_card, sub)] += prob_[i];
  }
  return TableModel(std::move(sub_card), std::move(sub_prob));
}

JointTable TableModel::as_joint_table() const {
  JointTable table;
  for (std::size_t i = 0; i < prob_.size(); ++i)
    if (prob_[i] > 0.0) table.probabilities[unflatten(static_cast<int>(i))] = prob_[i];
  return table;
}

}  // namespace mxmiss
