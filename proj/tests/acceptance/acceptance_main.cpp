// Acceptance suite: exercises every guarantee the library ships end to end
// and prints one PASS/FAIL line per criterion. The simulation criteria run
// the full desk-scale MVN grid and take tens of minutes; pass
// --skip-simulation while iterating on the fast criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mxmiss/experiment.hpp"
#include "mxmiss/selection.hpp"
#include "mxmiss/verify.hpp"

namespace {

using namespace mxmiss;

int failures = 0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criteria 1 & 2: FDR control and power trends on the desk-scale MVN grid.

struct GridCell {
  double rho, p0, mean_fdp, se_fdp, mean_power, se_power;
  int n_ok;
};

struct SimulationOutcome {
  std::string label;
  std::vector<GridCell> cells;
};

SimulationOutcome run_mvn_combination(Method method, MaskCandidates mode) {
  ExperimentConfig config;
  config.family = Family::kMvn;
  config.method = method;
  config.p = 50;
  config.n = 150;
  config.amplitude_sqrt_rule = true;  // a = 10 / sqrt(N)
  config.support_size = 6;
  config.q = 0.1;
  config.rho_grid = {0.0, 0.4, 0.8};
  config.p0_grid = {0.0, 0.2, 0.4};
  config.mask_mode = mode;
  config.replicates = 200;
  config.master_seed = 20260810;

  SimulationOutcome outcome;
  outcome.label = to_string(method) + "/" + to_string(mode);
  std::fprintf(stderr, "  running %s (1800 trials)...\n", outcome.label.c_str());
  const ExperimentResult result =
      run_experiment(config, [](std::size_t done, std::size_t total) {
        if (done % 300 == 0 || done == total)
          std::fprintf(stderr, "    %zu/%zu\r", done, total);
        if (done == total) std::fprintf(stderr, "\n");
      });
  for (const auto& row : result.summary)
    outcome.cells.push_back({row.rho, row.p0, row.mean_fdp, row.se_fdp, row.mean_power,
                             row.se_power, row.n_ok});
  return outcome;
}

void criteria_1_and_2() {
  const double q = 0.1;
  bool fdr_ok = true, trend_ok = true;
  std::string fdr_worst, trend_worst;
  double fdr_margin = -1e9;

  const Method methods[] = {Method::kPosterior, Method::kUnivariate};
  const MaskCandidates modes[] = {MaskCandidates::kTrueFeatures,
                                  MaskCandidates::kNullFeatures, MaskCandidates::kAll};
  for (Method method : methods) {
    for (MaskCandidates mode : modes) {
      const SimulationOutcome outcome = run_mvn_combination(method, mode);

      std::printf("  %s summary:\n", outcome.label.c_str());
      for (const auto& c : outcome.cells)
        std::printf("    rho=%-4g p0=%-4g fdp=%.4f(se %.4f) power=%.4f(se %.4f) n_ok=%d\n",
                    c.rho, c.p0, c.mean_fdp, c.se_fdp, c.mean_power, c.se_power, c.n_ok);

      for (const auto& c : outcome.cells) {
        const double excess = c.mean_fdp - (q + 3.0 * c.se_fdp);
        if (excess > fdr_margin) {
          fdr_margin = excess;
          fdr_worst = outcome.label + " rho=" + fmt(c.rho) + " p0=" + fmt(c.p0) +
                      " fdp=" + fmt(c.mean_fdp) + " bound=" + fmt(q + 3.0 * c.se_fdp);
        }
        if (excess > 0.0) fdr_ok = false;
      }

      // Power ordering with 2 SE slack per adjacent comparison, along both
      // grid axes in every configuration.
      const auto cell_at = [&](double rho, double p0) -> const GridCell& {
        for (const auto& c : outcome.cells)
          if (c.rho == rho && c.p0 == p0) return c;
        throw std::logic_error("missing grid cell");
      };
      const double rhos[] = {0.0, 0.4, 0.8};
      const double p0s[] = {0.0, 0.2, 0.4};
      for (double p0 : p0s) {
        for (int r = 0; r + 1 < 3; ++r) {
          const GridCell& lo = cell_at(rhos[r], p0);
          const GridCell& hi = cell_at(rhos[r + 1], p0);
          const double slack =
              2.0 * std::sqrt(lo.se_power * lo.se_power + hi.se_power * hi.se_power);
          if (hi.mean_power > lo.mean_power + slack) {
            trend_ok = false;
            trend_worst = outcome.label + ": power rose with rho at p0=" + fmt(p0);
          }
        }
      }
      for (double rho : rhos) {
        for (int r = 0; r + 1 < 3; ++r) {
          const GridCell& lo = cell_at(rho, p0s[r]);
          const GridCell& hi = cell_at(rho, p0s[r + 1]);
          const double slack =
              2.0 * std::sqrt(lo.se_power * lo.se_power + hi.se_power * hi.se_power);
          if (hi.mean_power > lo.mean_power + slack) {
            trend_ok = false;
            trend_worst = outcome.label + ": power rose with p0 at rho=" + fmt(rho);
          }
        }
      }
    }
  }

  report(1,
         "mean FDP <= q + 3 SE on the desk-scale MVN grid, both pipelines, all mask modes",
         fdr_ok, "worst margin at " + fdr_worst);
  report(2, "mean power non-increasing in rho and p0 (2 SE slack)", trend_ok,
         trend_ok ? "all adjacent comparisons ordered" : trend_worst);
  if (!trend_ok) {
    std::printf(
        "    analysis: with |S*| = 6 the knockoff+ rule cannot select fewer than\n"
        "    ceil(1/q) = 10 features, so desk-scale power consists of rare bursts in\n"
        "    which correlated companions of the signals clear the threshold together.\n"
        "    Bursts are more frequent at moderate correlation than at rho = 0, which\n"
        "    reverses the rho trend below the selection floor. The supplementary run\n"
        "    below repeats the study above the floor (|S*| = 12), where the trends\n"
        "    are expected to hold.\n");
  }
}

// Supplementary (not a pinned criterion): the same study with the support
// size lifted above the knockoff+ selection floor. Printed for evidence;
// does not contribute to the exit code.
void supplementary_above_floor_trends() {
  ExperimentConfig config;
  config.family = Family::kMvn;
  config.method = Method::kPosterior;
  config.p = 50;
  config.n = 150;
  config.amplitude_sqrt_rule = true;
  config.support_size = 12;
  config.q = 0.1;
  config.rho_grid = {0.0, 0.4, 0.8};
  config.p0_grid = {0.0, 0.2, 0.4};
  config.mask_mode = MaskCandidates::kTrueFeatures;
  config.replicates = 100;
  config.master_seed = 20260810;

  std::fprintf(stderr, "  running supplementary |S*|=12 study (900 trials)...\n");
  const ExperimentResult result = run_experiment(config);
  std::printf("  supplementary posterior/true-features with |S*| = 12:\n");
  for (const auto& row : result.summary)
    std::printf("    rho=%-4g p0=%-4g fdp=%.4f(se %.4f) power=%.4f(se %.4f)\n", row.rho,
                row.p0, row.mean_fdp, row.se_fdp, row.mean_power, row.se_power);

  bool ordered = true;
  const auto power_at = [&](double rho, double p0) {
    for (const auto& row : result.summary)
      if (row.rho == rho && row.p0 == p0) return std::make_pair(row.mean_power, row.se_power);
    throw std::logic_error("missing grid cell");
  };
  const double rhos[] = {0.0, 0.4, 0.8};
  const double p0s[] = {0.0, 0.2, 0.4};
  for (double p0 : p0s)
    for (int r = 0; r + 1 < 3; ++r) {
      const auto [plo, slo] = power_at(rhos[r], p0);
      const auto [phi, shi] = power_at(rhos[r + 1], p0);
      if (phi > plo + 2.0 * std::sqrt(slo * slo + shi * shi)) ordered = false;
    }
  for (double rho : rhos)
    for (int r = 0; r + 1 < 3; ++r) {
      const auto [plo, slo] = power_at(rho, p0s[r]);
      const auto [phi, shi] = power_at(rho, p0s[r + 1]);
      if (phi > plo + 2.0 * std::sqrt(slo * slo + shi * shi)) ordered = false;
    }
  std::printf("  [%s] supplementary: above the selection floor the power trends are %s\n",
              ordered ? "INFO" : "WARN", ordered ? "non-increasing as expected" : "NOT ordered");
}

// ---------------------------------------------------------------------------

void criterion_from_suite(int criterion, const std::string& what,
                          const std::vector<CheckResult>& results) {
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    if (!r.pass) ok = false;
    if (r.statistic > worst) {
      worst = r.statistic;
      worst_name = r.name;
    }
    std::printf("    [%s] %s (statistic %.3g, threshold %.3g)\n", r.pass ? "ok" : "FAIL",
                r.name.c_str(), r.statistic, r.threshold);
  }
  report(criterion, what, ok, "worst statistic " + fmt(worst) + " at '" + worst_name + "'");
}

// Criterion 8: the selection machinery oracles.
void criterion_8() {
  Rng rng(20260810);
  bool ok = true;
  std::string detail = "threshold scan, KKT, objective trace, and AUC all agree";

  // Brute-force threshold scan on 1000 random W vectors.
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const int p = 1 + rng.uniform_int(40);
    Eigen::VectorXd w(p);
    for (int j = 0; j < p; ++j) {
      const double mag = rng.uniform_int(6) * 0.5;
      w[j] = rng.bernoulli(0.5) ? mag : -mag;
    }
    const double q = 0.05 + 0.9 * rng.uniform();

    double expected = std::numeric_limits<double>::infinity();
    std::vector<double> candidates;
    for (int j = 0; j < p; ++j)
      if (w[j] != 0.0) candidates.push_back(std::abs(w[j]));
    std::sort(candidates.begin(), candidates.end());
    for (double t : candidates) {
      int neg = 0, pos = 0;
      for (int j = 0; j < p; ++j) {
        neg += w[j] <= -t;
        pos += w[j] >= t;
      }
      if ((1.0 + neg) / std::max(1, pos) <= q) {
        expected = t;
        break;
      }
    }
    const SelectionResult result = knockoff_plus_threshold(w, q);
    if (std::isinf(expected) != std::isinf(result.threshold) ||
        (!std::isinf(expected) && std::abs(expected - result.threshold) > 1e-12)) {
      ok = false;
      detail = "threshold scan disagreed on trial " + std::to_string(trial);
    }
  }

  // KKT subgradient conditions and the monotone objective trace.
  for (int trial = 0; trial < 10 && ok; ++trial) {
    const int n = 200, d = 5;
    Eigen::MatrixXd design(n, d);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      double eta = 0.0;
      for (int j = 0; j < d; ++j) {
        design(i, j) = rng.gaussian();
        if (j < 2) eta += design(i, j);
      }
      labels[i] = rng.bernoulli(sigmoid(eta)) ? 1 : 0;
    }
    const double lambda = 0.5 + 2.0 * rng.uniform();
    const LassoLogisticFit fit = fit_lasso_logistic(design, labels, lambda);
    if (!fit.converged) {
      ok = false;
      detail = "KKT test fit did not converge";
      break;
    }
    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s)
      if (fit.objective_trace[s] >
          fit.objective_trace[s - 1] + 1e-9 * (1.0 + std::abs(fit.objective_trace[s - 1]))) {
        ok = false;
        detail = "objective increased within a sweep";
      }
    const Eigen::VectorXd grad =
        lasso_logistic_gradient(design, labels, fit.coefficients, fit.intercept);
    for (int j = 0; j < d; ++j) {
      const bool zero = fit.coefficients[j] == 0.0;
      const double violation =
          zero ? std::max(0.0, std::abs(grad[j]) - lambda)
               : std::abs(grad[j] + lambda * (fit.coefficients[j] > 0 ? 1.0 : -1.0));
      if (violation > 1e-5) {
        ok = false;
        detail = "KKT violation " + fmt(violation) + " at coordinate " + std::to_string(j);
      }
    }
    if (std::abs(grad[d]) > 1e-5) {
      ok = false;
      detail = "intercept gradient " + fmt(std::abs(grad[d]));
    }
  }

  // AUC hand counts.
  if (ok) {
    const bool auc_ok =
        std::abs(auc_score(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 0, 0}) -
                 1.0) < 1e-12 &&
        std::abs(auc_score(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{0, 1, 1})) <
            1e-12 &&
        std::abs(auc_score(std::vector<double>{1.0, 1.0, 0.0}, std::vector<int>{1, 0, 0}) -
                 0.75) < 1e-12;
    if (!auc_ok) {
      ok = false;
      detail = "AUC hand counts disagreed";
    }
  }
  report(8, "selection machinery matches its independent oracles", ok, detail);
}

// Criterion 9: byte-identical trials.csv across thread counts.
void criterion_9() {
  ExperimentConfig config;
  config.family = Family::kMvn;
  config.method = Method::kPosterior;
  config.p = 15;
  config.n = 80;
  config.support_size = 3;
  config.q = 0.2;
  config.rho_grid = {0.0, 0.5};
  config.p0_grid = {0.0, 0.3};
  config.mask_mode = MaskCandidates::kAll;
  config.replicates = 5;
  config.master_seed = 424242;

  const auto emit_with_threads = [&](int threads, const char* name) {
    config.threads = threads;
    const ExperimentResult result = run_experiment(config);
    const auto dir = std::filesystem::temp_directory_path() / name;
    emit_results(result, dir);
    std::ifstream in(dir / "trials.csv");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };

  const std::string a = emit_with_threads(1, "mx-acc-t1");
  const std::string b = emit_with_threads(3, "mx-acc-t3");
  const std::string c = emit_with_threads(3, "mx-acc-t3b");
  const bool ok = !a.empty() && a == b && b == c;
  report(9, "identical seed and config give byte-identical trials.csv across thread counts",
         ok,
         ok ? fmt(static_cast<double>(a.size())) + " bytes compared equal" : "files differ");
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_simulation = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--skip-simulation") == 0) skip_simulation = true;

  const auto start = std::chrono::steady_clock::now();

  if (skip_simulation) {
    std::printf("[SKIP] criteria 1-2: simulation grid skipped on request\n");
  } else {
    criteria_1_and_2();
    supplementary_above_floor_trends();
  }

  criterion_from_suite(3,
                       "posterior imputation MSE bounded by univariate and both match the "
                       "closed forms (4 SE)",
                       verify_mse());
  criterion_from_suite(4,
                       "exact swap-invariance of (imputed, knockoff) for every swap set "
                       "(TV <= 1e-10)",
                       verify_exchangeability());
  criterion_from_suite(5,
                       "forward table exact to 1e-12 and posterior path law exact to 1e-10",
                       verify_posterior());
  criterion_from_suite(6,
                       "posterior imputation preserves the data law under MCAR and MAR "
                       "(TV <= 1e-12) and the mutation is caught",
                       verify_mar());
  criterion_from_suite(7,
                       "exhaustive Markov blanket equals the pairwise "
                       "conditional-dependence set",
                       verify_markov_blanket());
  criterion_8();
  criterion_9();

  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  std::printf("%s — %d failure(s), %lld s total\n", failures == 0 ? "ALL PASS" : "FAILED",
              failures, static_cast<long long>(seconds));
  return failures == 0 ? 0 : 1;
}
