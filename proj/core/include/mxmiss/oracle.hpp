#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "mxmiss/choices.hpp"

namespace mxmiss {

// Exact law of a finite random object, keyed by outcome tuple.
struct JointTable {
  std::map<std::vector<int>, double> probabilities;

  double total() const;
  double prob(const std::vector<int>& outcome) const;
};

struct SupportTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs the pipeline once per branch of its decision tree and accumulates
// the product of branch probabilities, yielding the exact output law. The
// pipeline must be a pure function of the choices it draws.
JointTable enumerate_pipeline_joint(
    const std::function<std::vector<int>(Choices&)>& pipeline,
    std::size_t max_leaves = 4'000'000);

// Half the L1 distance between two laws over the union of their supports.
// Outcome tuples must have matching lengths.
double tv_distance(const JointTable& a, const JointTable& b);

// Max over all swap sets S of TV between the law of (x_hat, x_tilde) and
// the law of the pair with coordinates in S exchanged. Outcomes must be
// concatenated pairs of length 2p.
double check_pairwise_exchangeable(const JointTable& pair_joint, int p);

// TV between the law of X and the law of the imputed vector.
double check_distribution_preserved(const JointTable& law_x,
                                    const JointTable& law_xhat);

struct NotStrictlyPositive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smallest M with Y independent of X_{M'} given X_M, by exhaustive subset
// search. Outcomes are (x_1..x_p, y) tuples; the joint must be strictly
// positive on its product support.
std::vector<int> markov_blanket_bruteforce(const JointTable& joint_xy);

// {i : Y not independent of X_i given X_{-i}}, the other side of the
// blanket equivalence.
std::vector<int> pairwise_dependent_set(const JointTable& joint_xy,
                                        double tolerance = 1e-9);

// Conditional-independence test on a finite table: max over the support of
// |P(y | x_cond, x_extra) - P(y | x_cond)|.
double conditional_dependence(const JointTable& joint_xy,
                              const std::vector<int>& cond_set,
                              const std::vector<int>& extra_set);

}  // namespace mxmiss
