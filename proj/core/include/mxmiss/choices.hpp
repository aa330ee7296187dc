#pragma once

#include <span>

#include "mxmiss/rng.hpp"

namespace mxmiss {

// Source of discrete random decisions. Samplers written against this
// interface run in two modes: backed by an Rng they draw one realization;
// backed by the enumeration driver (see oracle.hpp) every branch is visited
// and the exact output law of the sampler is recovered.
class Choices {
 public:
  virtual ~Choices() = default;

  // Picks an index proportional to the given nonnegative weights.
  virtual int choose(std::span<const double> weights) = 0;
};

class RandomChoices final : public Choices {
 public:
  explicit RandomChoices(Rng& rng) : rng_(&rng) {}
  int choose(std::span<const double> weights) override {
    return rng_->discrete(weights);
  }

 private:
  Rng* rng_;
};

}  // namespace mxmiss
