#include "mxmiss/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mxmiss {

namespace {

Eigen::ArrayXd signs_of(std::span<const int> labels) {
  Eigen::ArrayXd y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] ? 1.0 : -1.0;
  return y;
}

void check_labels(std::span<const int> labels) {
  bool has_pos = false, has_neg = false;
  for (int l : labels) (l ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw SingleClassLabels("logistic fit: both label classes must be present");
}

// sum log(1 + exp(t)) evaluated stably.
double softplus_sum(const Eigen::ArrayXd& t) {
  return (t.cwiseMax(0.0) + (-t.abs()).exp().log1p()).sum();
}

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

}  // namespace

Eigen::VectorXd lasso_logistic_gradient(const Eigen::MatrixXd& design,
                                        std::span<const int> labels,
                                        const Eigen::VectorXd& beta, double intercept) {
  const Eigen::ArrayXd y = signs_of(labels);
  const Eigen::ArrayXd eta = (design * beta).array() + intercept;
  const Eigen::ArrayXd r = y / (1.0 + (y * eta).exp());  // y * sigmoid(-y eta)
  Eigen::VectorXd grad(design.cols() + 1);
  grad.head(design.cols()) = -(design.transpose() * r.matrix());
  grad[design.cols()] = -r.sum();
  return grad;
}

LassoLogisticFit fit_lasso_logistic(const Eigen::MatrixXd& design,
                                    std::span<const int> labels, double lambda,
                                    const FitOptions& options) {
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols();
  if (n < 2 || d < 1) throw std::invalid_argument("logistic fit: design too small");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("logistic fit: label count mismatch");
  check_labels(labels);
  if (!design.allFinite() || !std::isfinite(lambda) || lambda < 0.0)
    throw NonFiniteInput("logistic fit: non-finite design or penalty");

  const Eigen::ArrayXd y = signs_of(labels);

  LassoLogisticFit fit;
  fit.lambda = lambda;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  double beta0 = 0.0;
  if (options.warm_start != nullptr && options.warm_start->coefficients.size() == d) {
    beta = options.warm_start->coefficients;
    beta0 = options.warm_start->intercept;
  }

  // 0.25 bounds the logistic curvature, so these majorized steps can only
  // decrease the objective.
  Eigen::VectorXd curvature(d);
  for (Eigen::Index j = 0; j < d; ++j) curvature[j] = 0.25 * design.col(j).squaredNorm();
  const double curvature0 = 0.25 * static_cast<double>(n);

  Eigen::ArrayXd eta = (design * beta).array() + beta0;
  Eigen::ArrayXd r = y / (1.0 + (y * eta).exp());

  const auto objective = [&]() {
    return softplus_sum(-y * eta) + lambda * beta.lpNorm<1>();
  };

  double prev_obj = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;

    const double g0 = -r.sum();
    const double step0 = -g0 / curvature0;
    if (step0 != 0.0) {
      beta0 += step0;
      eta += step0;
      r = y / (1.0 + (y * eta).exp());
      max_change = std::abs(step0);
    }

    for (Eigen::Index j = 0; j < d; ++j) {
      if (curvature[j] <= 0.0) continue;
      const double g = -(r * design.col(j).array()).sum();
      if (beta[j] == 0.0 && std::abs(g) <= lambda) continue;
      const double target = soft_threshold(curvature[j] * beta[j] - g, lambda) / curvature[j];
      const double delta = target - beta[j];
      if (delta != 0.0) {
        beta[j] = target;
        eta += delta * design.col(j).array();
        r = y / (1.0 + (y * eta).exp());
        max_change = std::max(max_change, std::abs(delta));
      }
    }

    const double obj = objective();
    fit.objective_trace.push_back(obj);
    fit.sweeps = sweep + 1;
    if (obj > prev_obj + 1e-9 * (1.0 + std::abs(prev_obj)))
      throw std::logic_error("logistic fit: objective increased within a sweep");
    prev_obj = obj;

    if (max_change < options.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.coefficients = std::move(beta);
  fit.intercept = beta0;
  return fit;
}

double auc_score(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n || n == 0)
    throw std::invalid_argument("auc_score: size mismatch");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });

  std::vector<double> midrank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) midrank[order[k]] = rank;
    i = j + 1;
  }

  std::size_t n1 = 0;
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k]) {
      ++n1;
      rank_sum += midrank[k];
    }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0)
    throw std::invalid_argument("auc_score: both classes must be present");
  const double u = rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

double cv_select_lambda(const Eigen::MatrixXd& design, std::span<const int> labels,
                        std::span<const double> grid, int folds, Rng& rng,
                        const FitOptions& cv_options) {
  const Eigen::Index n = design.rows();
  if (folds < 2 || n < folds) throw std::invalid_argument("cv_select_lambda: bad fold count");
  if (grid.empty()) throw std::invalid_argument("cv_select_lambda: empty grid");

  std::vector<int> pos, neg;
  for (Eigen::Index i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(static_cast<int>(i));
  if (static_cast<int>(pos.size()) < folds || static_cast<int>(neg.size()) < folds)
    throw std::invalid_argument("cv_select_lambda: a class has fewer members than folds");

  const auto shuffle = [&rng](std::vector<int>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
      std::swap(v[i], v[rng.uniform_int(i + 1)]);
  };
  shuffle(pos);
  shuffle(neg);

  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = static_cast<int>(i) % folds;
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of[neg[i]] = static_cast<int>(i) % folds;

  // Largest penalty first so each fit warm-starts the next along the path.
  std::vector<std::size_t> by_desc(grid.size());
  std::iota(by_desc.begin(), by_desc.end(), 0);
  std::sort(by_desc.begin(), by_desc.end(),
            [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

  std::vector<double> mean_auc(grid.size(), 0.0);
  for (int k = 0; k < folds; ++k) {
    std::vector<int> train, val;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of[i] == k ? val : train).push_back(static_cast<int>(i));

    Eigen::MatrixXd x_train(train.size(), design.cols());
    std::vector<int> y_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      x_train.row(i) = design.row(train[i]);
      y_train[i] = labels[train[i]];
    }
    Eigen::MatrixXd x_val(val.size(), design.cols());
    std::vector<int> y_val(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      x_val.row(i) = design.row(val[i]);
      y_val[i] = labels[val[i]];
    }

    LassoLogisticFit prev;
    bool have_prev = false;
    for (std::size_t gi : by_desc) {
      FitOptions opt = cv_options;
      opt.warm_start = have_prev ? &prev : nullptr;
      LassoLogisticFit fit = fit_lasso_logistic(x_train, y_train, grid[gi], opt);
      Eigen::VectorXd scores = x_val * fit.coefficients;
      scores.array() += fit.intercept;
      mean_auc[gi] += auc_score(std::span<const double>(scores.data(), scores.size()), y_val) /
                      static_cast<double>(folds);
      prev = std::move(fit);
      have_prev = true;
    }
  }

  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi) {
    if (mean_auc[gi] > mean_auc[best] ||
        (mean_auc[gi] == mean_auc[best] && grid[gi] > grid[best]))
      best = gi;
  }
  return grid[best];
}

KnockoffStats knockoff_stats(const LassoLogisticFit& fit, int p) {
  if (fit.coefficients.size() != 2 * p)
    throw std::invalid_argument("knockoff_stats: fit dimension must be 2p");
  KnockoffStats stats;
  stats.t_scores = fit.coefficients.head(p).cwiseAbs();
  stats.t_tilde_scores = fit.coefficients.tail(p).cwiseAbs();
  stats.w = stats.t_scores - stats.t_tilde_scores;
  return stats;
}

SelectionResult knockoff_plus_threshold(const Eigen::VectorXd& w, double q) {
  if (!w.allFinite()) throw NonFiniteInput("knockoff_plus_threshold: W must be finite");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("knockoff_plus_threshold: q must lie in (0, 1)");

  std::vector<double> sorted(w.data(), w.data() + w.size());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> candidates;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) candidates.push_back(std::abs(w[j]));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  SelectionResult result;
  result.q = q;
  result.threshold = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const auto neg = static_cast<double>(
        std::upper_bound(sorted.begin(), sorted.end(), -t) - sorted.begin());
    const auto pos = static_cast<double>(
        sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
    if ((1.0 + neg) / std::max(1.0, pos) <= q) {
      result.threshold = t;
      break;
    }
  }
  if (std::isfinite(result.threshold))
    for (Eigen::Index j = 0; j < w.size(); ++j)
      if (w[j] >= result.threshold) result.selected.push_back(static_cast<int>(j));
  return result;
}

SelectionScore score_selection(const SelectionResult& result,
                               std::span<const int> s_star, int p) {
  std::vector<bool> is_true(p, false);
  for (int j : s_star) {
    if (j < 0 || j >= p) throw std::out_of_range("score_selection: support out of range");
    is_true[j] = true;
  }
  int false_hits = 0, true_hits = 0;
  for (int j : result.selected) (is_true[j] ? true_hits : false_hits) += 1;
  SelectionScore score;
  score.fdp = static_cast<double>(false_hits) /
              std::max<std::size_t>(1, result.selected.size());
  score.power = s_star.empty()
                    ? 0.0
                    : static_cast<double>(true_hits) / static_cast<double>(s_star.size());
  return score;
}

Eigen::MatrixXd standardize_columns(Eigen::MatrixXd design) {
  const double n = static_cast<double>(design.rows());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const double mean = design.col(j).mean();
    design.col(j).array() -= mean;
    const double sd = std::sqrt(design.col(j).squaredNorm() / n);
    if (sd > 0.0) design.col(j) /= sd;
  }
  return design;
}

}  // namespace mxmiss
