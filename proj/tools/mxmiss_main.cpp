// Command line driver: simulation grids, the oracle certification suites, the
// imputation MSE report, and knockoff generation for user CSV data.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mxmiss/experiment.hpp"
#include "mxmiss/mvn.hpp"
#include "mxmiss/pipelines.hpp"
#include "mxmiss/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

mxmiss::ExperimentConfig preset_config(const std::string& family, bool paper_scale) {
  using mxmiss::ExperimentConfig;
  using mxmiss::Family;
  using mxmiss::MaskCandidates;
  using mxmiss::Method;
  ExperimentConfig config;
  if (family == "mvn") {
    config.family = Family::kMvn;
    config.method = Method::kPosterior;
    config.mask_mode = MaskCandidates::kTrueFeatures;
    config.amplitude_sqrt_rule = true;
    config.q = 0.1;
    if (paper_scale) {
      config.p = 700;
      config.n = 1050;
      config.support_size = 42;
      config.rho_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
      config.p0_grid = {0.0, 0.1, 0.2, 0.3, 0.4};
      config.replicates = 31;
    } else {
      config.p = 50;
      config.n = 150;
      config.support_size = 6;
      config.rho_grid = {0.0, 0.4, 0.8};
      config.p0_grid = {0.0, 0.2, 0.4};
      config.replicates = 200;
    }
  } else if (family == "hmm") {
    config.family = Family::kHmm;
    config.method = Method::kModifiedSesia;
    config.mask_mode = MaskCandidates::kTrueFeatures;
    config.amplitude = 0.32;
    config.amplitude_sqrt_rule = false;
    config.response_shift = 4.0;
    config.q = 0.1;
    if (paper_scale) {
      config.p = 1000;
      config.n = 1500;
      config.support_size = 60;
      config.p0_grid = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
      config.n_grid = {500, 625, 750, 875, 1000, 1125, 1250, 1375, 1500, 1625, 1750, 1875, 2000};
      config.replicates = 128;
    } else {
      config.p = 60;
      config.n = 300;
      config.support_size = 6;
      config.p0_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
      config.n_grid = {300};
      config.replicates = 100;
    }
  } else {
    throw std::invalid_argument("unknown preset family '" + family + "'");
  }
  return config;
}

int run_simulate(const std::string& config_path, const std::string& family,
                 bool paper_scale, std::optional<std::uint64_t> seed,
                 std::optional<std::string> method, std::optional<std::string> mask_mode,
                 std::optional<int> replicates, const std::string& out_dir, int threads,
                 bool quiet) {
  mxmiss::ExperimentConfig config;
  if (!config_path.empty()) {
    std::string text = read_file(config_path);
    config = mxmiss::parse_experiment_config(text);
  } else {
    config = preset_config(family, paper_scale);
  }
  if (seed) config.master_seed = *seed;
  if (replicates) config.replicates = *replicates;
  if (method || mask_mode) {
    nlohmann::json patch = nlohmann::json::parse(mxmiss::experiment_config_to_json(config));
    if (method) patch["method"] = *method;
    if (mask_mode) patch["mask_mode"] = *mask_mode;
    config = mxmiss::parse_experiment_config(patch.dump());
  }
  if (threads > 0) config.threads = threads;
  config.validate();

  mxmiss::ProgressFn progress;
  if (!quiet) {
    progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 50 == 0)
        std::fprintf(stderr, "\r%zu/%zu trials", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }

  const mxmiss::ExperimentResult result = mxmiss::run_experiment(config, progress);
  mxmiss::emit_results(result, out_dir);

  std::printf("family=%s method=%s grid_points=%zu replicates=%d wall_ms=%lld\n",
              mxmiss::to_string(config.family).c_str(),
              mxmiss::to_string(config.method).c_str(), result.summary.size(),
              config.replicates, static_cast<long long>(result.total_wall_ms));
  for (const auto& row : result.summary) {
    std::printf("  rho=%-5g p0=%-5g N=%-5d mean_fdp=%.4f (se %.4f)  mean_power=%.4f (se %.4f)  n_ok=%d\n",
                row.rho, row.p0, row.n, row.mean_fdp, row.se_fdp, row.mean_power,
                row.se_power, row.n_ok);
  }
  std::printf("results written to %s\n", out_dir.c_str());
  return kExitOk;
}

int run_verify(const std::string& suite) {
  const std::vector<mxmiss::CheckResult> results = mxmiss::run_verification_suite(suite);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("[%s] %-70s statistic=%.3g threshold=%.3g%s%s\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.statistic, r.threshold, r.detail.empty() ? "" : "  ",
                r.detail.c_str());
    ok = ok && r.pass;
  }
  std::printf("%s: %zu checks, %s\n", suite.c_str(), results.size(),
              ok ? "all passed" : "FAILURES PRESENT");
  return ok ? kExitOk : kExitVerificationFailure;
}

int run_mse(int num_models, int num_samples, std::uint64_t seed) {
  mxmiss::Rng rng = mxmiss::Rng::from_keys(seed);
  std::printf("%-6s %-8s %-12s %-12s %-12s %-12s\n", "model", "dim", "mse_post",
              "analytic", "mse_uni", "analytic");
  for (int m = 0; m < num_models; ++m) {
    const int p = 2 + rng.uniform_int(5);
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) a(i, j) = rng.gaussian();
    mxmiss::MvnModel model;
    model.mean = Eigen::VectorXd::Zero(p);
    model.covariance = a * a.transpose() / p + 0.3 * Eigen::MatrixXd::Identity(p, p);
    const int target = rng.uniform_int(p);
    mxmiss::Rng mc_rng = rng.split(1000 + m);
    const mxmiss::MseReport report = mxmiss::mse_compare(model, target, num_samples, mc_rng);
    std::printf("%-6d %-8d %-12.5f %-12.5f %-12.5f %-12.5f\n", m, p, report.mse_posterior,
                report.analytic_posterior, report.mse_univariate,
                report.analytic_univariate);
  }
  const std::vector<mxmiss::CheckResult> checks = mxmiss::verify_mse(seed);
  bool ok = true;
  for (const auto& r : checks) {
    std::printf("[%s] %s (worst excess %.3g)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.statistic);
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitVerificationFailure;
}

// --- impute subcommand -------------------------------------------------------

struct CsvMatrix {
  std::vector<std::vector<double>> rows;  // NaN marks a missing cell
  std::size_t cols = 0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

CsvMatrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvMatrix csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    bool numeric = true;
    for (const std::string& cell : split_csv_line(line)) {
      if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) numeric = false;
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (first && !numeric) {  // header line
      first = false;
      continue;
    }
    first = false;
    if (!numeric) throw std::runtime_error("non-numeric cell in " + path);
    if (csv.cols == 0) csv.cols = row.size();
    if (row.size() != csv.cols) throw std::runtime_error("ragged csv row in " + path);
    csv.rows.push_back(std::move(row));
  }
  if (csv.rows.empty()) throw std::runtime_error("no data rows in " + path);
  return csv;
}

// Available-case moment estimates with an eigenvalue floor so the result is
// usable as a sampling model.
mxmiss::MvnModel fit_mvn_moments(const CsvMatrix& csv) {
  const int p = static_cast<int>(csv.cols);
  mxmiss::MvnModel model;
  model.mean = Eigen::VectorXd::Zero(p);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(p);
  for (const auto& row : csv.rows)
    for (int j = 0; j < p; ++j)
      if (!std::isnan(row[j])) {
        model.mean[j] += row[j];
        counts[j] += 1;
      }
  for (int j = 0; j < p; ++j) {
    if (counts[j] == 0) throw std::runtime_error("column with no observed values");
    model.mean[j] /= counts[j];
  }

  model.covariance = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      double sum = 0.0;
      int n_jk = 0;
      for (const auto& row : csv.rows) {
        if (std::isnan(row[j]) || std::isnan(row[k])) continue;
        sum += (row[j] - model.mean[j]) * (row[k] - model.mean[k]);
        ++n_jk;
      }
      if (n_jk < 2) throw std::runtime_error("too few jointly observed values for covariance");
      model.covariance(j, k) = model.covariance(k, j) = sum / (n_jk - 1);
    }
  }

  // Pairwise-complete covariances need not be PSD; clamp the spectrum.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.covariance);
  Eigen::VectorXd lambda = es.eigenvalues();
  const double floor = 1e-6 * model.covariance.diagonal().maxCoeff();
  for (int i = 0; i < p; ++i) lambda[i] = std::max(lambda[i], floor);
  model.covariance =
      es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  model.covariance = 0.5 * (model.covariance + model.covariance.transpose());
  return model;
}

mxmiss::MvnModel load_mvn_model(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  mxmiss::MvnModel model;
  const auto mean = j.at("mean").get<std::vector<double>>();
  model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  const auto cov = j.at("covariance").get<std::vector<std::vector<double>>>();
  model.covariance.resize(cov.size(), cov.size());
  for (std::size_t i = 0; i < cov.size(); ++i) {
    if (cov[i].size() != cov.size())
      throw std::runtime_error("covariance must be square");
    for (std::size_t k = 0; k < cov.size(); ++k) model.covariance(i, k) = cov[i][k];
  }
  model.validate();
  return model;
}

void write_matrix_csv(const std::filesystem::path& path,
                      const std::vector<Eigen::VectorXd>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  char buf[64];
  for (const auto& row : rows) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.10g", row[j]);
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

int run_impute(const std::string& input, const std::string& model_path,
               const std::string& method, const std::string& mechanism, bool allow_mar,
               std::uint64_t seed, const std::string& out_dir) {
  const CsvMatrix csv = read_csv(input);
  const mxmiss::MvnModel model =
      model_path.empty() ? fit_mvn_moments(csv) : load_mvn_model(model_path);
  if (model.dim() != static_cast<int>(csv.cols))
    throw std::runtime_error("model dimension does not match csv column count");

  std::vector<mxmiss::MaskedSample> rows;
  rows.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    std::vector<bool> mask(csv.cols);
    for (std::size_t j = 0; j < csv.cols; ++j) mask[j] = std::isnan(row[j]);
    rows.emplace_back(row, std::move(mask));
  }

  mxmiss::Rng rng = mxmiss::Rng::from_keys(seed, 0xC5);
  const mxmiss::MissingMechanism declared = mechanism == "mar"
                                                ? mxmiss::MissingMechanism::kMar
                                                : mxmiss::MissingMechanism::kMcar;
  std::vector<mxmiss::KnockoffPair> pairs;
  if (method == "posterior") {
    pairs = mxmiss::posterior_knockoffs(rows, mxmiss::make_mvn_posterior_imputer(model),
                                        mxmiss::make_mvn_knockoff_sampler(model), rng);
  } else if (method == "univariate") {
    pairs = mxmiss::univariate_knockoffs(rows, mxmiss::make_mvn_observed_factory(model),
                                         mxmiss::make_mvn_marginal_sampler(model), rng,
                                         declared, allow_mar);
  } else {
    throw std::invalid_argument("impute method must be posterior or univariate");
  }

  std::filesystem::create_directories(out_dir);
  std::vector<Eigen::VectorXd> imputed, knockoffs;
  imputed.reserve(pairs.size());
  knockoffs.reserve(pairs.size());
  for (auto& pair : pairs) {
    imputed.push_back(std::move(pair.imputed));
    knockoffs.push_back(std::move(pair.knockoff));
  }
  write_matrix_csv(std::filesystem::path(out_dir) / "imputed.csv", imputed);
  write_matrix_csv(std::filesystem::path(out_dir) / "knockoffs.csv", knockoffs);
  std::printf("wrote %zu rows to %s/{imputed.csv,knockoffs.csv}\n", imputed.size(),
              out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model-X knockoffs for data with missing values"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a simulation grid");
  std::string config_path, family = "mvn", out_dir = "results";
  bool paper_scale = false, desk_scale = false, quiet = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method, mask_mode;
  std::optional<int> replicates;
  int threads = 0;
  simulate->add_option("--config", config_path, "experiment config JSON file");
  simulate->add_option("--family", family, "preset family (mvn or hmm)")
      ->check(CLI::IsMember({"mvn", "hmm"}));
  simulate->add_flag("--paper", paper_scale, "paper-scale preset grid");
  simulate->add_flag("--desk", desk_scale, "desk-scale preset grid (default)");
  simulate->add_option("--seed", seed, "master seed override");
  simulate->add_option("--method", method,
                       "posterior | univariate | modified-sesia | posterior-sesia");
  simulate->add_option("--mask-mode", mask_mode, "true-features | null-features | all");
  simulate->add_option("--replicates", replicates, "replicate count override");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--threads", threads, "worker threads (0 = hardware)");
  simulate->add_flag("--quiet", quiet, "suppress progress output");

  // verify
  auto* verify = app.add_subcommand("verify", "run the oracle certification suites");
  std::string suite = "all";
  verify->add_option("--suite", suite, "exchangeability | mar | posterior | mse | mb | all")
      ->check(CLI::IsMember({"exchangeability", "mar", "posterior", "mse", "mb", "all"}));

  // mse
  auto* mse = app.add_subcommand("mse", "imputation MSE comparison report");
  int mse_models = 10, mse_samples = 4000;
  std::uint64_t mse_seed = 7;
  mse->add_option("--models", mse_models, "number of random models");
  mse->add_option("--samples", mse_samples, "Monte Carlo samples per model");
  mse->add_option("--seed", mse_seed, "seed");

  // impute
  auto* impute = app.add_subcommand("impute", "impute + knockoff a CSV with NaN cells");
  std::string input, model_path, impute_method = "posterior", mechanism = "mcar",
              impute_out = "impute-out";
  bool allow_mar = false;
  std::uint64_t impute_seed = 1;
  impute->add_option("--input", input, "input CSV (empty/nan cells are missing)")
      ->required();
  impute->add_option("--model", model_path,
                     "MVN model JSON {mean, covariance}; fitted by moments when absent");
  impute->add_option("--method", impute_method, "posterior | univariate")
      ->check(CLI::IsMember({"posterior", "univariate"}));
  impute->add_option("--mechanism", mechanism, "declared missingness mechanism")
      ->check(CLI::IsMember({"mcar", "mar"}));
  impute->add_flag("--allow-mar", allow_mar,
                   "run the univariate method even under a declared MAR mechanism");
  impute->add_option("--seed", impute_seed, "seed");
  impute->add_option("--out", impute_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      if (paper_scale && desk_scale)
        throw std::invalid_argument("choose one of --desk or --paper");
      return run_simulate(config_path, family, paper_scale, seed, method, mask_mode,
                          replicates, out_dir, threads, quiet);
    }
    if (verify->parsed()) return run_verify(suite);
    if (mse->parsed()) return run_mse(mse_models, mse_samples, mse_seed);
    if (impute->parsed())
      return run_impute(input, model_path, impute_method, mechanism, allow_mar,
                        impute_seed, impute_out);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerificationFailure;
  }
  return kExitUsage;
}
