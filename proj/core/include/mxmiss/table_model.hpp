#pragma once

#include <span>
#include <vector>

#include "mxmiss/choices.hpp"
#include "mxmiss/masked_sample.hpp"
#include "mxmiss/oracle.hpp"

namespace mxmiss {

// Fully explicit joint distribution over a handful of discrete coordinates.
// Backs the oracle certifications of the generic (non latent-variable)
// pipelines: it supports exact posterior imputation, univariate marginals,
// and a knockoff sampler by sequential conditional independent pairs whose
// conditionals are enumerated from the joint.
class TableModel {
 public:
  TableModel(std::vector<int> cardinalities, std::vector<double> probabilities);

  int dim() const { return static_cast<int>(card_.size()); }
  const std::vector<int>& cardinalities() const { return card_; }
  double prob(std::span<const int> x) const;
  const std::vector<double>& probabilities() const { return prob_; }

  std::vector<double> marginal(int coord) const;

  // One draw from the joint.
  std::vector<int> sample(Choices& choices) const;

  // Completes the missing coordinates from P(X_m | X_o = x_o) as a single
  // joint draw. Throws ZeroEvidence when x_o is impossible.
  std::vector<int> impute_posterior(const MaskedSample& sample, Choices& choices) const;

  // Knockoff copy by sequential conditional independent pairs: for each
  // coordinate in turn, resample it from its conditional given the other
  // originals and the knockoffs drawn so far.
  std::vector<int> scip_knockoff(std::span<const int> x, Choices& choices) const;

  // Joint of a subset of coordinates, for knockoffs of the observed block.
  TableModel marginal_on(std::span<const int> coords) const;

  JointTable as_joint_table() const;

 private:
  int flatten(std::span<const int> x) const;
  std::vector<int> unflatten(int index) const;

  std::vector<int> card_;
  std::vector<double> prob_;  // row-major, sums to 1
};

}  // namespace mxmiss
