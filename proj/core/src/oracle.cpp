#include "mxmiss/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace mxmiss {

double JointTable::total() const {
  double t = 0.0;
  for (const auto& [_, p] : probabilities) t += p;
  return t;
}

double JointTable::prob(const std::vector<int>& outcome) const {
  auto it = probabilities.find(outcome);
  return it == probabilities.end() ? 0.0 : it->second;
}

namespace {

// Replays a prescribed prefix of branch indices, then follows the first
// positive-probability branch, recording every decision point so the
// driver can schedule the siblings.
class EnumerationChoices final : public Choices {
 public:
  explicit EnumerationChoices(const std::vector<int>& path) : path_(&path) {}

  int choose(std::span<const double> weights) override {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("enumerate: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("enumerate: no positive weight");
    std::vector<double> norm(weights.begin(), weights.end());
    for (double& w : norm) w /= total;

    int pick = -1;
    if (depth_ < path_->size()) {
      pick = (*path_)[depth_];
      if (pick < 0 || static_cast<std::size_t>(pick) >= norm.size() || norm[pick] <= 0.0)
        throw std::logic_error("enumerate: pipeline is not a pure function of its choices");
    } else {
      for (std::size_t i = 0; i < norm.size(); ++i)
        if (norm[i] > 0.0) {
          pick = static_cast<int>(i);
          break;
        }
    }
    weight_ *= norm[pick];
    taken_.push_back(pick);
    seen_.push_back(std::move(norm));
    ++depth_;
    return pick;
  }

  double weight() const { return weight_; }
  const std::vector<int>& taken() const { return taken_; }
  const std::vector<std::vector<double>>& seen() const { return seen_; }

 private:
  const std::vector<int>* path_;
  std::size_t depth_ = 0;
  double weight_ = 1.0;
  std::vector<int> taken_;
  std::vector<std::vector<double>> seen_;
};

}  // namespace

JointTable enumerate_pipeline_joint(
    const std::function<std::vector<int>(Choices&)>& pipeline,
    std::size_t max_leaves) {
  JointTable table;
  std::vector<int> path;
  std::size_t leaves = 0;
  for (;;) {
    EnumerationChoices choices(path);
    std::vector<int> outcome = pipeline(choices);
    if (++leaves > max_leaves)
      throw SupportTooLarge("enumerate_pipeline_joint: branch count exceeds limit");
    table.probabilities[std::move(outcome)] += choices.weight();

    // Backtrack to the deepest decision with an unvisited positive sibling.
    const auto& taken = choices.taken();
    const auto& seen = choices.seen();
    int d = static_cast<int>(taken.size()) - 1;
    for (; d >= 0; --d) {
      int next = -1;
      for (std::size_t i = taken[d] + 1; i < seen[d].size(); ++i)
        if (seen[d][i] > 0.0) {
          next = static_cast<int>(i);
          break;
        }
      if (next >= 0) {
        path.assign(taken.begin(), taken.begin() + d);
        path.push_back(next);
        break;
      }
    }
    if (d < 0) break;
  }
  return table;
}

double tv_distance(const JointTable& a, const JointTable& b) {
  if (!a.probabilities.empty() && !b.probabilities.empty() &&
      a.probabilities.begin()->first.size() != b.probabilities.begin()->first.size())
    throw std::invalid_argument("tv_distance: outcome dimension mismatch");
  double l1 = 0.0;
  for (const auto& [key, pa] : a.probabilities) l1 += std::abs(pa - b.prob(key));
  for (const auto& [key, pb] : b.probabilities)
    if (a.probabilities.find(key) == a.probabilities.end()) l1 += pb;
  return 0.5 * l1;
}

double check_pairwise_exchangeable(const JointTable& pair_joint, int p) {
  for (const auto& [key, _] : pair_joint.probabilities)
    if (static_cast<int>(key.size()) != 2 * p)
      throw std::invalid_argument("check_pairwise_exchangeable: outcomes must have length 2p");
  double max_tv = 0.0;
  for (std::uint32_t s = 0; s < (1u << p); ++s) {
    JointTable swapped;
    for (const auto& [key, prob] : pair_joint.probabilities) {
      std::vector<int> out = key;
      for (int j = 0; j < p; ++j)
        if (s & (1u << j)) std::swap(out[j], out[j + p]);
      swapped.probabilities[std::move(out)] += prob;
    }
    max_tv = std::max(max_tv, tv_distance(pair_joint, swapped));
  }
  return max_tv;
}

double check_distribution_preserved(const JointTable& law_x, const JointTable& law_xhat) {
  return tv_distance(law_x, law_xhat);
}

double conditional_dependence(const JointTable& joint_xy,
                              const std::vector<int>& cond_set,
                              const std::vector<int>& extra_set) {
  // P(y | x_cond, x_extra) vs P(y | x_cond), with everything else summed out.
  std::map<std::vector<int>, double> joint_cey, marg_ce, joint_cy, marg_c;
  for (const auto& [key, prob] : joint_xy.probabilities) {
    const int y = key.back();
    std::vector<int> c, ce;
    for (int j : cond_set) c.push_back(key[j]);
    ce = c;
    for (int j : extra_set) ce.push_back(key[j]);
    std::vector<int> cey = ce;
    cey.push_back(y);
    std::vector<int> cy = c;
    cy.push_back(y);
    joint_cey[cey] += prob;
    marg_ce[ce] += prob;
    joint_cy[cy] += prob;
    marg_c[c] += prob;
  }
  double max_dev = 0.0;
  for (const auto& [cey, p_cey] : joint_cey) {
    std::vector<int> ce(cey.begin(), cey.end() - 1);
    std::vector<int> c(cey.begin(), cey.begin() + cond_set.size());
    std::vector<int> cy = c;
    cy.push_back(cey.back());
    const double denom_ce = marg_ce.at(ce);
    const double denom_c = marg_c.at(c);
    if (denom_ce <= 0.0 || denom_c <= 0.0) continue;
    const double p1 = p_cey / denom_ce;
    const double p2 = joint_cy.count(cy) ? joint_cy.at(cy) / denom_c : 0.0;
    max_dev = std::max(max_dev, std::abs(p1 - p2));
  }
  return max_dev;
}

namespace {

void require_strictly_positive(const JointTable& joint_xy) {
  if (joint_xy.probabilities.empty())
    throw NotStrictlyPositive("markov_blanket_bruteforce: empty table");
  const std::size_t dim = joint_xy.probabilities.begin()->first.size();
  std::vector<std::vector<int>> values(dim);
  for (const auto& [key, prob] : joint_xy.probabilities) {
    if (prob <= 0.0)
      throw NotStrictlyPositive("markov_blanket_bruteforce: zero-probability outcome");
    for (std::size_t j = 0; j < dim; ++j) {
      auto& v = values[j];
      if (std::find(v.begin(), v.end(), key[j]) == v.end()) v.push_back(key[j]);
    }
  }
  std::size_t product = 1;
  for (const auto& v : values) product *= v.size();
  if (product != joint_xy.probabilities.size())
    throw NotStrictlyPositive("markov_blanket_bruteforce: support is not a full product");
}

}  // namespace

std::vector<int> markov_blanket_bruteforce(const JointTable& joint_xy) {
  require_strictly_positive(joint_xy);
  const int p = static_cast<int>(joint_xy.probabilities.begin()->first.size()) - 1;
  constexpr double kTolerance = 1e-9;
  for (int size = 0; size <= p; ++size) {
    for (std::uint32_t bits = 0; bits < (1u << p); ++bits) {
      if (std::popcount(bits) != size) continue;
      std::vector<int> m, rest;
      for (int j = 0; j < p; ++j)
        (bits & (1u << j) ? m : rest).push_back(j);
      if (rest.empty() || conditional_dependence(joint_xy, m, rest) <= kTolerance)
        return m;
    }
  }
  std::vector<int> all(p);
  for (int j = 0; j < p; ++j) all[j] = j;
  return all;
}

std::vector<int> pairwise_dependent_set(const JointTable& joint_xy, double tolerance) {
  const int p = static_cast<int>(joint_xy.probabilities.begin()->first.size()) - 1;
  std::vector<int> result;
  for (int i = 0; i < p; ++i) {
    std::vector<int> rest;
    for (int j = 0; j < p; ++j)
      if (j != i) rest.push_back(j);
    if (conditional_dependence(joint_xy, rest, {i}) > tolerance) result.push_back(i);
  }
  return result;
}

}  // namespace mxmiss
