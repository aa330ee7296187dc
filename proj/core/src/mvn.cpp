#include "mxmiss/mvn.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace mxmiss {

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

Eigen::VectorXd subvector(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

GaussianConditional mvn_condition(const MvnModel& model, const MaskedSample& sample) {
  if (static_cast<int>(sample.size()) != model.dim())
    throw std::invalid_argument("mvn_condition: sample length mismatch");
  const std::vector<int> m = sample.missing_indices();
  const std::vector<int> o = sample.observed_indices();

  GaussianConditional cond;
  cond.target = m;
  if (o.empty()) {
    cond.mean = subvector(model.mean, m);
    cond.covariance = submatrix(model.covariance, m, m);
    return cond;
  }
  if (m.empty()) {
    cond.mean.resize(0);
    cond.covariance.resize(0, 0);
    return cond;
  }

  Eigen::MatrixXd sigma_oo = submatrix(model.covariance, o, o);
  const Eigen::MatrixXd sigma_mo = submatrix(model.covariance, m, o);
  const Eigen::MatrixXd sigma_mm = submatrix(model.covariance, m, m);
  Eigen::VectorXd x_o(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) x_o[i] = sample.values[o[i]];
  const Eigen::VectorXd resid = x_o - subvector(model.mean, o);

  Eigen::LLT<Eigen::MatrixXd> llt(sigma_oo);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * sigma_oo.trace() / static_cast<double>(o.size());
    sigma_oo.diagonal().array() += jitter;
    llt.compute(sigma_oo);
    if (llt.info() != Eigen::Success)
      throw SingularObservedBlock("mvn_condition: observed covariance block is singular");
  }

  cond.mean = subvector(model.mean, m) + sigma_mo * llt.solve(resid);
  Eigen::MatrixXd cov = sigma_mm - sigma_mo * llt.solve(sigma_mo.transpose());
  cond.covariance = 0.5 * (cov + cov.transpose());
  return cond;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw NotPositiveDefinite("psd_sqrt: eigendecomposition failed");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  Eigen::VectorXd lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -floor * scale)
      throw NotPositiveDefinite("psd_sqrt: matrix has a negative eigenvalue");
    lambda[i] = std::max(lambda[i], 0.0);
  }
  return es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

Eigen::VectorXd sample_conditional(const GaussianConditional& cond, Rng& rng) {
  const Eigen::Index n = cond.mean.size();
  if (n == 0) return cond.mean;
  const Eigen::MatrixXd b = psd_sqrt(cond.covariance);
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = rng.gaussian();
  return cond.mean + b * g;
}

ScalarMoments mvn_marginal(const MvnModel& model, int j) {
  if (j < 0 || j >= model.dim()) throw std::out_of_range("mvn_marginal: index out of range");
  return {model.mean[j], model.covariance(j, j)};
}

GaussianKnockoffSampler GaussianKnockoffSampler::build(const MvnModel& model) {
  const int p = model.dim();
  GaussianKnockoffSampler sampler;
  sampler.mu_ = model.mean;
  sampler.sigma_ = model.covariance;

  const Eigen::VectorXd d = model.covariance.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr = model.covariance;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) corr(i, j) /= d[i] * d[j];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr, Eigen::EigenvaluesOnly);
  const double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_min <= 0.0)
    throw NotPositiveDefinite("gaussian knockoffs: covariance is not positive definite");
  const double s_corr = std::min(2.0 * lambda_min, 1.0);
  sampler.s_ = s_corr * model.covariance.diagonal();

  Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("gaussian knockoffs: covariance factorization failed");
  // D S^{-1} computed as (S^{-1} D)^T through the factorization.
  const Eigen::MatrixXd sinv_d = llt.solve(Eigen::MatrixXd(sampler.s_.asDiagonal()));
  sampler.mean_map_ = Eigen::MatrixXd::Identity(p, p) - sinv_d.transpose();
  Eigen::MatrixXd cond = 2.0 * Eigen::MatrixXd(sampler.s_.asDiagonal()) -
                         sampler.s_.asDiagonal() * sinv_d;
  sampler.cond_cov_ = 0.5 * (cond + cond.transpose());
  sampler.cond_sqrt_ = psd_sqrt(sampler.cond_cov_);
  return sampler;
}

Eigen::VectorXd GaussianKnockoffSampler::sample(const Eigen::VectorXd& x, Rng& rng) const {
  if (x.size() != mu_.size())
    throw std::invalid_argument("gaussian knockoffs: dimension mismatch");
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = rng.gaussian();
  return mu_ + mean_map_ * (x - mu_) + cond_sqrt_ * g;
}

Eigen::MatrixXd GaussianKnockoffSampler::joint_covariance() const {
  const int p = static_cast<int>(mu_.size());
  Eigen::MatrixXd g(2 * p, 2 * p);
  const Eigen::MatrixXd off = sigma_ - Eigen::MatrixXd(s_.asDiagonal());
  g.topLeftCorner(p, p) = sigma_;
  g.topRightCorner(p, p) = off;
  g.bottomLeftCorner(p, p) = off;
  g.bottomRightCorner(p, p) = sigma_;
  return g;
}

GaussianKnockoffSampler build_gaussian_knockoff_sampler(const MvnModel& model) {
  return GaussianKnockoffSampler::build(model);
}

Eigen::VectorXd sample_gaussian_knockoff(const GaussianKnockoffSampler& sampler,
                                         const Eigen::VectorXd& x, Rng& rng) {
  return sampler.sample(x, rng);
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol_lower,
                           Rng& rng) {
  Eigen::VectorXd g(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) g[i] = rng.gaussian();
  return mu + chol_lower * g;
}

}  // namespace mxmiss
