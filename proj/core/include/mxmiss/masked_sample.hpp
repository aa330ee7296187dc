#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mxmiss {

// One observation with missing entries. The boolean mask is authoritative;
// values at masked positions hold the NaN sentinel and must never be read.
struct MaskedSample {
  std::vector<double> values;
  std::vector<bool> missing;

  MaskedSample() = default;

  MaskedSample(std::vector<double> vals, std::vector<bool> mask)
      : values(std::move(vals)), missing(std::move(mask)) {
    if (values.size() != missing.size())
      throw std::invalid_argument("MaskedSample: size mismatch");
    for (std::size_t j = 0; j < values.size(); ++j)
      if (missing[j]) values[j] = sentinel();
  }

  static double sentinel() { return std::numeric_limits<double>::quiet_NaN(); }

  static MaskedSample complete(std::vector<double> vals) {
    const std::size_t p = vals.size();
    return MaskedSample(std::move(vals), std::vector<bool>(p, false));
  }

  std::size_t size() const { return values.size(); }

  std::vector<int> observed_indices() const {
    std::vector<int> o;
    for (std::size_t j = 0; j < missing.size(); ++j)
      if (!missing[j]) o.push_back(static_cast<int>(j));
    return o;
  }

  std::vector<int> missing_indices() const {
    std::vector<int> m;
    for (std::size_t j = 0; j < missing.size(); ++j)
      if (missing[j]) m.push_back(static_cast<int>(j));
    return m;
  }

  std::size_t num_missing() const {
    std::size_t n = 0;
    for (bool b : missing) n += b;
    return n;
  }
};

// Exchanges the coordinates indexed by S between two equal-length vectors.
// Involutive; fixes the complement of S.
template <typename Vec>
void swap_coordinates(Vec& x, Vec& x_tilde, std::span<const int> s) {
  if (static_cast<std::size_t>(x.size()) != static_cast<std::size_t>(x_tilde.size()))
    throw std::invalid_argument("swap_coordinates: length mismatch");
  for (int j : s) {
    if (j < 0 || static_cast<std::size_t>(j) >= static_cast<std::size_t>(x.size()))
      throw std::out_of_range("swap_coordinates: index out of range");
    std::swap(x[j], x_tilde[j]);
  }
}

template <typename Vec>
std::pair<Vec, Vec> swapped(Vec x, Vec x_tilde, std::span<const int> s) {
  swap_coordinates(x, x_tilde, s);
  return {std::move(x), std::move(x_tilde)};
}

}  // namespace mxmiss
