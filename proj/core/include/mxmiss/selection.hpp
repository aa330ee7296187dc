#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

#include "mxmiss/rng.hpp"

namespace mxmiss {

struct SingleClassLabels : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LassoLogisticFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<double> objective_trace;  // per sweep, non-increasing
  bool converged = false;
  int sweeps = 0;
};

struct FitOptions {
  int max_sweeps = 10000;
  double tol = 1e-7;  // max absolute coefficient change per sweep
  const LassoLogisticFit* warm_start = nullptr;
};

// Minimizes sum_i log(1 + exp(-y_i (beta' x_i + beta0))) + lambda ||beta||_1
// over {0,1} labels mapped to +-1, by cyclic coordinate descent with
// majorized (0.25-curvature-bound) proximal steps and an unpenalized
// intercept. The bound makes every update, hence every sweep, decrease the
// objective.
LassoLogisticFit fit_lasso_logistic(const Eigen::MatrixXd& design,
                                    std::span<const int> labels, double lambda,
                                    const FitOptions& options = {});

// Gradient of the smooth part of the objective at (beta, beta0);
// coefficient gradients first, intercept last.
Eigen::VectorXd lasso_logistic_gradient(const Eigen::MatrixXd& design,
                                        std::span<const int> labels,
                                        const Eigen::VectorXd& beta, double intercept);

// Area under the ROC curve by the rank-based Mann-Whitney estimator with
// midrank tie handling. Requires both classes present.
double auc_score(std::span<const double> scores, std::span<const int> labels);

// Mean-validation-AUC maximizer over the lambda grid with stratified
// folds; ties break toward the larger lambda. Fold fits can run on a
// reduced sweep budget via cv_options.
double cv_select_lambda(const Eigen::MatrixXd& design, std::span<const int> labels,
                        std::span<const double> grid, int folds, Rng& rng,
                        const FitOptions& cv_options = {});

struct KnockoffStats {
  Eigen::VectorXd t_scores;        // |beta_i|
  Eigen::VectorXd t_tilde_scores;  // |beta_{i+p}|
  Eigen::VectorXd w;               // T_i - Tt_i
};

KnockoffStats knockoff_stats(const LassoLogisticFit& fit, int p);

struct SelectionResult {
  std::vector<int> selected;
  double threshold = 0.0;  // +inf when nothing clears the rule
  double q = 0.0;
};

// Knockoff+ rule: tau = min{ t in {|W_j| : W_j != 0} :
// (1 + #{W_j <= -t}) / max(1, #{W_j >= t}) <= q }, selecting {j : W_j >= tau}.
SelectionResult knockoff_plus_threshold(const Eigen::VectorXd& w, double q);

struct SelectionScore {
  double fdp = 0.0;
  double power = 0.0;
};

SelectionScore score_selection(const SelectionResult& result,
                               std::span<const int> s_star, int p);

// Center and scale every column to unit variance (identical rule for
// original and knockoff columns); constant columns are left centered.
Eigen::MatrixXd standardize_columns(Eigen::MatrixXd design);

}  // namespace mxmiss
