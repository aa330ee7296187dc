#include "mxmiss/models.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mxmiss {

void MvnModel::validate() const {
  if (mean.size() != covariance.rows() || covariance.rows() != covariance.cols())
    throw std::invalid_argument("MvnModel: dimension mismatch");
  const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) throw std::invalid_argument("MvnModel: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("MvnModel: covariance not positive semidefinite");
}

Eigen::MatrixXd make_ar1_covariance(int p, double rho) {
  if (p < 1) throw std::invalid_argument("make_ar1_covariance: p must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("make_ar1_covariance: rho must lie in [0, 1)");
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
  return sigma;
}

namespace {

void validate_stochastic(const Eigen::MatrixXd& rows, const char* what) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    if (rows.row(r).minCoeff() < 0.0)
      throw std::invalid_argument(std::string(what) + ": negative entry");
    if (std::abs(rows.row(r).sum() - 1.0) > 1e-12)
      throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  }
}

}  // namespace

void HmmModel::validate() const {
  if (num_states < 1 || num_symbols < 1 || length < 1)
    throw std::invalid_argument("HmmModel: sizes must be positive");
  if (initial.size() != num_states)
    throw std::invalid_argument("HmmModel: initial size mismatch");
  if (initial.minCoeff() < 0.0 || std::abs(initial.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("HmmModel: initial not a probability vector");
  if (length > 1 && transition.size() != 1 &&
      transition.size() != static_cast<std::size_t>(length - 1))
    throw std::invalid_argument("HmmModel: transition table count");
  if (emission.size() != 1 && emission.size() != static_cast<std::size_t>(length))
    throw std::invalid_argument("HmmModel: emission table count");
  for (const auto& a : transition) {
    if (a.rows() != num_states || a.cols() != num_states)
      throw std::invalid_argument("HmmModel: transition shape");
    validate_stochastic(a, "HmmModel transition");
  }
  for (const auto& e : emission) {
    if (e.rows() != num_states || e.cols() != num_symbols)
      throw std::invalid_argument("HmmModel: emission shape");
    validate_stochastic(e, "HmmModel emission");
  }
}

Eigen::VectorXd HmmModel::state_marginal(int t) const {
  Eigen::VectorXd pz = initial;
  for (int s = 1; s <= t; ++s) pz = transition_into(s).transpose() * pz;
  return pz;
}

std::pair<std::vector<int>, std::vector<int>> HmmModel::simulate(Rng& rng) const {
  std::vector<int> z(length), x(length);
  std::vector<double> w(num_states);
  for (int t = 0; t < length; ++t) {
    if (t == 0) {
      for (int k = 0; k < num_states; ++k) w[k] = initial[k];
    } else {
      const auto& a = transition_into(t);
      for (int k = 0; k < num_states; ++k) w[k] = a(z[t - 1], k);
    }
    z[t] = rng.discrete(w);
    const auto& e = emission_at(t);
    std::vector<double> we(num_symbols);
    for (int s = 0; s < num_symbols; ++s) we[s] = e(z[t], s);
    x[t] = rng.discrete(we);
  }
  return {std::move(z), std::move(x)};
}

HmmModel make_nine_state_hmm(int length) {
  if (length < 1) throw std::invalid_argument("make_nine_state_hmm: length must be >= 1");
  constexpr int k = 9;
  HmmModel model;
  model.num_states = k;
  model.num_symbols = k;
  model.length = length;
  model.initial = Eigen::VectorXd::Zero(k);
  model.initial[1] = 1.0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (int y = 0; y < k; ++y) {
    a(y, y) = 0.9;
    a(y, (y + 1) % k) = 0.1;
  }
  Eigen::MatrixXd e(k, k);
  e.setConstant(0.65 / 7.0);
  for (int z = 0; z < k; ++z) {
    e(z, z) = 0.35 / 2.0;
    e(z, (z + 1) % k) = 0.35 / 2.0;
  }
  model.transition = {a};
  model.emission = {e};
  return model;
}

int LatentFactorModel::latent_size() const {
  int n = 1;
  for (int c : latent_card) n *= c;
  return n;
}

int LatentFactorModel::flatten_latent(std::span<const int> z) const {
  int index = 0;
  for (std::size_t i = 0; i < latent_card.size(); ++i) index = index * latent_card[i] + z[i];
  return index;
}

std::vector<int> LatentFactorModel::unflatten_latent(int index) const {
  std::vector<int> z(latent_card.size());
  for (int i = static_cast<int>(latent_card.size()) - 1; i >= 0; --i) {
    z[i] = index % latent_card[i];
    index /= latent_card[i];
  }
  return z;
}

void LatentFactorModel::validate() const {
  if (latent_card.empty() || symbol_card.empty())
    throw std::invalid_argument("LatentFactorModel: empty model");
  if (static_cast<int>(latent_joint.size()) != latent_size())
    throw std::invalid_argument("LatentFactorModel: joint size mismatch");
  double total = 0.0;
  for (double p : latent_joint) {
    if (p < 0.0) throw std::invalid_argument("LatentFactorModel: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("LatentFactorModel: joint does not sum to 1");
  if (emission.size() != symbol_card.size())
    throw std::invalid_argument("LatentFactorModel: emission count mismatch");
  for (std::size_t i = 0; i < emission.size(); ++i) {
    if (emission[i].rows() != latent_size() || emission[i].cols() != symbol_card[i])
      throw std::invalid_argument("LatentFactorModel: emission shape");
    validate_stochastic(emission[i], "LatentFactorModel emission");
  }
}

ResponseModel ResponseModel::from_support(int p, std::span<const int> s_star,
                                          double amplitude, double shift) {
  ResponseModel model;
  model.coefficients = Eigen::VectorXd::Zero(p);
  model.amplitude = amplitude;
  model.shift = shift;
  model.support.assign(s_star.begin(), s_star.end());
  for (int j : model.support) {
    if (j < 0 || j >= p) throw std::invalid_argument("ResponseModel: support out of range");
    model.coefficients[j] = amplitude;
  }
  return model;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

int simulate_response(const Eigen::VectorXd& x, const ResponseModel& model, Rng& rng) {
  if (x.size() != model.coefficients.size())
    throw std::invalid_argument("simulate_response: dimension mismatch");
  double inner = 0.0;
  for (int j : model.support) inner += (x[j] - model.shift) * model.coefficients[j];
  return rng.bernoulli(sigmoid(inner)) ? 1 : 0;
}

std::vector<int> resolve_candidate_set(int p, MaskCandidates mode,
                                       std::span<const int> s_star) {
  std::vector<int> m;
  switch (mode) {
    case MaskCandidates::kTrueFeatures:
      m.assign(s_star.begin(), s_star.end());
      break;
    case MaskCandidates::kNullFeatures: {
      std::vector<bool> is_true(p, false);
      for (int j : s_star) is_true[j] = true;
      for (int j = 0; j < p; ++j)
        if (!is_true[j]) m.push_back(j);
      break;
    }
    case MaskCandidates::kAll:
      m.resize(p);
      for (int j = 0; j < p; ++j) m[j] = j;
      break;
  }
  return m;
}

std::vector<bool> generate_mcar_mask(int p, const MissingnessSpec& spec,
                                     std::span<const int> s_star, Rng& rng) {
  if (p < 1) throw std::invalid_argument("generate_mcar_mask: p must be >= 1");
  if (!(spec.p0 >= 0.0 && spec.p0 <= 1.0))
    throw std::invalid_argument("generate_mcar_mask: p0 must lie in [0, 1]");
  std::vector<bool> mask(p, false);
  for (int j : resolve_candidate_set(p, spec.mode, s_star))
    mask[j] = rng.bernoulli(spec.p0);
  return mask;
}

}  // namespace mxmiss
