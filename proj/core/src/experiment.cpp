#include "mxmiss/experiment.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "mxmiss/hmm.hpp"
#include "mxmiss/mvn.hpp"
#include "mxmiss/pipelines.hpp"
#include "mxmiss/selection.hpp"

namespace mxmiss {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kLambdaGrid[] = {1e-10, 1e-2, 1e-1, 1.0, 1e1};
constexpr int kCvFolds = 5;
// Fold fits run on a reduced sweep budget; the final fit at the selected
// penalty uses the full default budget.
constexpr int kCvMaxSweeps = 500;

struct GridPoint {
  double rho = std::numeric_limits<double>::quiet_NaN();
  double p0 = 0.0;
  int n = 0;
};

std::vector<GridPoint> build_grid(const ExperimentConfig& config) {
  std::vector<GridPoint> grid;
  if (config.family == Family::kMvn) {
    for (double rho : config.rho_grid)
      for (double p0 : config.p0_grid) grid.push_back({rho, p0, config.n});
  } else {
    std::vector<int> ns = config.n_grid.empty() ? std::vector<int>{config.n} : config.n_grid;
    for (int n : ns)
      for (double p0 : config.p0_grid)
        grid.push_back({std::numeric_limits<double>::quiet_NaN(), p0, n});
  }
  return grid;
}

std::vector<int> draw_support(int p, int support_size, std::uint64_t master_seed) {
  Rng rng = Rng::from_keys(master_seed, 0, 0);
  std::vector<int> all(p);
  for (int j = 0; j < p; ++j) all[j] = j;
  for (int i = 0; i < support_size; ++i) {
    const int j = i + rng.uniform_int(p - i);
    std::swap(all[i], all[j]);
  }
  std::vector<int> s(all.begin(), all.begin() + support_size);
  std::sort(s.begin(), s.end());
  return s;
}

TrialRecord run_single_trial(const ExperimentConfig& config, const GridPoint& point,
                             int grid_index, int rep, const std::vector<int>& s_star) {
  TrialRecord record;
  record.grid_index = grid_index;
  record.rho = point.rho;
  record.p0 = point.p0;
  record.n = point.n;
  record.rep = rep;

  Rng trial_rng = Rng::from_keys(config.master_seed, grid_index + 1, rep + 1);
  record.seed = trial_rng.state();

  const auto start = std::chrono::steady_clock::now();
  try {
    Rng data_rng = trial_rng.split(1);
    Rng mask_rng = trial_rng.split(2);
    Rng pipe_rng = trial_rng.split(3);
    Rng cv_rng = trial_rng.split(4);

    const int p = config.p;
    const int n = point.n;
    const ResponseModel response = ResponseModel::from_support(
        p, s_star, config.effective_amplitude(n), config.response_shift);
    const MissingnessSpec spec{point.p0, config.mask_mode};

    std::vector<MaskedSample> rows;
    rows.reserve(n);
    std::vector<int> labels(n);

    MvnModel mvn_model;
    HmmModel hmm_model;
    if (config.family == Family::kMvn) {
      mvn_model.mean = Eigen::VectorXd::Zero(p);
      mvn_model.covariance = make_ar1_covariance(p, point.rho);
      const Eigen::MatrixXd chol =
          Eigen::LLT<Eigen::MatrixXd>(mvn_model.covariance).matrixL();
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = sample_mvn(mvn_model.mean, chol, data_rng);
        labels[i] = simulate_response(x, response, data_rng);
        std::vector<bool> mask = generate_mcar_mask(p, spec, s_star, mask_rng);
        rows.emplace_back(std::vector<double>(x.data(), x.data() + p), std::move(mask));
      }
    } else {
      hmm_model = make_nine_state_hmm(p);
      for (int i = 0; i < n; ++i) {
        const auto [z, symbols] = hmm_model.simulate(data_rng);
        Eigen::VectorXd x(p);
        for (int t = 0; t < p; ++t) x[t] = symbols[t];
        labels[i] = simulate_response(x, response, data_rng);
        std::vector<bool> mask = generate_mcar_mask(p, spec, s_star, mask_rng);
        rows.emplace_back(std::vector<double>(x.data(), x.data() + p), std::move(mask));
      }
    }

    std::vector<KnockoffPair> pairs;
    switch (config.method) {
      case Method::kPosterior:
        pairs = posterior_knockoffs(rows, make_mvn_posterior_imputer(mvn_model),
                                    make_mvn_knockoff_sampler(mvn_model), pipe_rng);
        break;
      case Method::kUnivariate:
        pairs = univariate_knockoffs(rows, make_mvn_observed_factory(mvn_model),
                                     make_mvn_marginal_sampler(mvn_model), pipe_rng);
        break;
      case Method::kPosteriorSesia:
        pairs = posterior_knockoffs(rows, make_hmm_posterior_imputer(hmm_model),
                                    make_hmm_knockoff_sampler(hmm_model), pipe_rng);
        break;
      case Method::kModifiedSesia:
        pairs.reserve(n);
        for (int i = 0; i < n; ++i) {
          Rng row_rng = pipe_rng.split(i);
          const DiscretePair dp = modified_sesia_knockoffs(hmm_model, rows[i], row_rng);
          KnockoffPair pair;
          pair.mask = rows[i].missing;
          pair.imputed.resize(p);
          pair.knockoff.resize(p);
          for (int t = 0; t < p; ++t) {
            pair.imputed[t] = dp.imputed[t];
            pair.knockoff[t] = dp.knockoff[t];
          }
          pairs.push_back(std::move(pair));
        }
        break;
    }

    Eigen::MatrixXd design(n, 2 * p);
    for (int i = 0; i < n; ++i) {
      design.row(i).head(p) = pairs[i].imputed.transpose();
      design.row(i).tail(p) = pairs[i].knockoff.transpose();
    }
    design = standardize_columns(std::move(design));

    FitOptions cv_options;
    cv_options.max_sweeps = kCvMaxSweeps;
    const double lambda_cv =
        cv_select_lambda(design, labels, kLambdaGrid, kCvFolds, cv_rng, cv_options);
    const LassoLogisticFit fit = fit_lasso_logistic(design, labels, lambda_cv);
    const KnockoffStats stats = knockoff_stats(fit, p);
    const SelectionResult selection = knockoff_plus_threshold(stats.w, config.q);
    const SelectionScore score = score_selection(selection, s_star, p);

    record.fdp = score.fdp;
    record.power = score.power;
    record.n_selected = static_cast<int>(selection.selected.size());
    record.tau = selection.threshold;
    record.lambda_cv = lambda_cv;
    record.status = "ok";
  } catch (const SingleClassLabels&) {
    record.status = "single-class-labels";
  } catch (const ZeroEvidence&) {
    record.status = "zero-evidence";
  } catch (const SingularObservedBlock&) {
    record.status = "singular-observed-block";
  } catch (const NotPositiveDefinite&) {
    record.status = "not-positive-definite";
  } catch (const std::exception&) {
    record.status = "error";
  }
  record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return record;
}

}  // namespace

double ExperimentConfig::effective_amplitude(int n_obs) const {
  return amplitude_sqrt_rule ? 10.0 / std::sqrt(static_cast<double>(n_obs)) : amplitude;
}

void ExperimentConfig::validate() const {
  if (p < 1 || n < 2) throw std::invalid_argument("config: p and N must be positive");
  if (support_size < 0 || support_size > p)
    throw std::invalid_argument("config: support size out of range");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("config: q must lie in (0, 1)");
  if (replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
  if (p0_grid.empty()) throw std::invalid_argument("config: p0_grid must be nonempty");
  for (double p0 : p0_grid)
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("config: p0 outside [0, 1]");
  if (family == Family::kMvn) {
    if (rho_grid.empty()) throw std::invalid_argument("config: rho_grid must be nonempty");
    for (double rho : rho_grid)
      if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("config: rho outside [0, 1)");
    if (method != Method::kPosterior && method != Method::kUnivariate)
      throw std::invalid_argument(
          "config: MVN data supports the posterior and univariate methods");
  } else {
    for (int ng : n_grid)
      if (ng < 2) throw std::invalid_argument("config: N grid entries must be >= 2");
    if (method != Method::kPosteriorSesia && method != Method::kModifiedSesia)
      throw std::invalid_argument(
          "config: HMM data supports the posterior-sesia and modified-sesia methods");
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.config = config;
  result.s_star = draw_support(config.p, config.support_size, config.master_seed);

  const std::vector<GridPoint> grid = build_grid(config);
  const std::size_t total = grid.size() * static_cast<std::size_t>(config.replicates);
  result.trials.resize(total);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
  std::mutex progress_mutex;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      const int g = static_cast<int>(task / config.replicates);
      const int r = static_cast<int>(task % config.replicates);
      result.trials[task] = run_single_trial(config, grid[g], g, r, result.s_star);
      const std::size_t done = completed.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(done, total);
      }
    }
  };

  int threads = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::set<std::uint64_t> seeds;
  std::size_t failed = 0;
  for (const auto& record : result.trials) {
    seeds.insert(record.seed);
    if (record.status != "ok") ++failed;
  }
  if (seeds.size() != result.trials.size())
    throw std::logic_error("run_experiment: per-trial seed collision");
  if (failed * 20 > total)
    throw std::runtime_error("run_experiment: more than 5% of trials failed");

  result.summary.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridSummary row;
    row.rho = grid[g].rho;
    row.p0 = grid[g].p0;
    row.n = grid[g].n;
    double sum_fdp = 0.0, sum_power = 0.0;
    int n_ok = 0;
    for (int r = 0; r < config.replicates; ++r) {
      const TrialRecord& t = result.trials[g * config.replicates + r];
      if (t.status != "ok") continue;
      ++n_ok;
      sum_fdp += t.fdp;
      sum_power += t.power;
    }
    row.n_ok = n_ok;
    if (n_ok > 0) {
      row.mean_fdp = sum_fdp / n_ok;
      row.mean_power = sum_power / n_ok;
      if (n_ok > 1) {
        double ss_fdp = 0.0, ss_power = 0.0;
        for (int r = 0; r < config.replicates; ++r) {
          const TrialRecord& t = result.trials[g * config.replicates + r];
          if (t.status != "ok") continue;
          ss_fdp += (t.fdp - row.mean_fdp) * (t.fdp - row.mean_fdp);
          ss_power += (t.power - row.mean_power) * (t.power - row.mean_power);
        }
        row.se_fdp = std::sqrt(ss_fdp / (n_ok - 1) / n_ok);
        row.se_power = std::sqrt(ss_power / (n_ok - 1) / n_ok);
      }
    }
    result.summary.push_back(row);
  }

  result.total_wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  return result;
}

namespace {

std::string fmt_double(double v, const char* spec = "%.10g") {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string to_string(Family family) { return family == Family::kMvn ? "mvn" : "hmm"; }

std::string to_string(Method method) {
  switch (method) {
    case Method::kPosterior: return "posterior";
    case Method::kUnivariate: return "univariate";
    case Method::kModifiedSesia: return "modified-sesia";
    case Method::kPosteriorSesia: return "posterior-sesia";
  }
  return "?";
}

std::string to_string(MaskCandidates mode) {
  switch (mode) {
    case MaskCandidates::kTrueFeatures: return "true-features";
    case MaskCandidates::kNullFeatures: return "null-features";
    case MaskCandidates::kAll: return "all";
  }
  return "?";
}

namespace {

Family family_from_string(const std::string& s) {
  if (s == "mvn") return Family::kMvn;
  if (s == "hmm") return Family::kHmm;
  throw std::invalid_argument("config: unknown family '" + s + "'");
}

Method method_from_string(const std::string& s) {
  if (s == "posterior") return Method::kPosterior;
  if (s == "univariate") return Method::kUnivariate;
  if (s == "modified-sesia") return Method::kModifiedSesia;
  if (s == "posterior-sesia") return Method::kPosteriorSesia;
  throw std::invalid_argument("config: unknown method '" + s + "'");
}

MaskCandidates mask_mode_from_string(const std::string& s) {
  if (s == "true-features") return MaskCandidates::kTrueFeatures;
  if (s == "null-features") return MaskCandidates::kNullFeatures;
  if (s == "all") return MaskCandidates::kAll;
  throw std::invalid_argument("config: unknown mask mode '" + s + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  ExperimentConfig config;
  config.family = family_from_string(j.at("family").get<std::string>());
  config.method = method_from_string(j.at("method").get<std::string>());
  config.p = j.at("p").get<int>();
  config.n = j.at("N").get<int>();
  if (j.contains("amplitude")) {
    if (j["amplitude"].is_string()) {
      if (j["amplitude"].get<std::string>() != "10/sqrt(N)")
        throw std::invalid_argument("config: the only amplitude rule is '10/sqrt(N)'");
      config.amplitude_sqrt_rule = true;
    } else {
      config.amplitude = j["amplitude"].get<double>();
      config.amplitude_sqrt_rule = false;
    }
  }
  config.support_size = j.at("support_size").get<int>();
  config.q = j.value("q", 0.1);
  config.rho_grid = j.value("rho_grid", std::vector<double>{});
  config.p0_grid = j.at("p0_grid").get<std::vector<double>>();
  config.n_grid = j.value("N_grid", std::vector<int>{});
  config.mask_mode = mask_mode_from_string(j.value("mask_mode", std::string("all")));
  config.replicates = j.at("replicates").get<int>();
  config.master_seed = j.at("master_seed").get<std::uint64_t>();
  config.response_shift =
      j.value("response_shift", config.family == Family::kHmm ? 4.0 : 0.0);
  config.threads = j.value("threads", 0);
  config.validate();
  return config;
}

namespace {

nlohmann::json config_to_json_object(const ExperimentConfig& config) {
  nlohmann::json j;
  j["family"] = to_string(config.family);
  j["method"] = to_string(config.method);
  j["p"] = config.p;
  j["N"] = config.n;
  if (config.amplitude_sqrt_rule)
    j["amplitude"] = "10/sqrt(N)";
  else
    j["amplitude"] = config.amplitude;
  j["support_size"] = config.support_size;
  j["q"] = config.q;
  j["rho_grid"] = config.rho_grid;
  j["p0_grid"] = config.p0_grid;
  j["N_grid"] = config.n_grid;
  j["mask_mode"] = to_string(config.mask_mode);
  j["replicates"] = config.replicates;
  j["master_seed"] = config.master_seed;
  j["response_shift"] = config.response_shift;
  j["threads"] = config.threads;
  return j;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& config) {
  return config_to_json_object(config).dump(2);
}

void emit_results(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string family = to_string(result.config.family);
  const std::string method = to_string(result.config.method);

  {
    std::ofstream trials(out_dir / "trials.csv");
    if (!trials) throw std::runtime_error("emit_results: cannot open trials.csv");
    trials << "family,method,rho,p0,N,rep,fdp,power,n_selected,tau,lambda_cv,seed,"
              "wall_ms,status\n";
    for (const TrialRecord& t : result.trials) {
      trials << family << ',' << method << ',' << fmt_double(t.rho) << ','
             << fmt_double(t.p0) << ',' << t.n << ',' << t.rep << ','
             << fmt_double(t.fdp) << ',' << fmt_double(t.power) << ',' << t.n_selected
             << ',' << fmt_double(t.tau) << ',' << fmt_double(t.lambda_cv, "%.6g") << ','
             << t.seed << ',' << 0 << ',' << t.status << '\n';
    }
  }

  {
    std::ofstream summary(out_dir / "summary.csv");
    if (!summary) throw std::runtime_error("emit_results: cannot open summary.csv");
    summary << "family,method,rho,p0,N,mean_fdp,se_fdp,mean_power,se_power,n_ok\n";
    for (const GridSummary& s : result.summary) {
      summary << family << ',' << method << ',' << fmt_double(s.rho) << ','
              << fmt_double(s.p0) << ',' << s.n << ',' << fmt_double(s.mean_fdp) << ','
              << fmt_double(s.se_fdp) << ',' << fmt_double(s.mean_power) << ','
              << fmt_double(s.se_power) << ',' << s.n_ok << '\n';
    }
  }

  {
    nlohmann::json j;
    j["config"] = config_to_json_object(result.config);
    j["version"] = kVersion;
    j["master_seed"] = result.config.master_seed;
    j["s_star"] = result.s_star;
    j["n_trials"] = result.trials.size();
    std::size_t failed = 0;
    for (const auto& t : result.trials)
      if (t.status != "ok") ++failed;
    j["n_failed"] = failed;
    j["total_wall_ms"] = result.total_wall_ms;
    std::ofstream run(out_dir / "run.json");
    if (!run) throw std::runtime_error("emit_results: cannot open run.json");
    run << j.dump(2) << '\n';
  }
}

}  // namespace mxmiss
