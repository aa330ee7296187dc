#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mxmiss/models.hpp"

namespace mxmiss {

enum class Family { kMvn, kHmm };
enum class Method { kPosterior, kUnivariate, kModifiedSesia, kPosteriorSesia };

std::string to_string(Family family);
std::string to_string(Method method);
std::string to_string(MaskCandidates mode);

struct ExperimentConfig {
  Family family = Family::kMvn;
  Method method = Method::kPosterior;
  int p = 50;  // feature count; sequence length for HMM data
  int n = 150;
  double amplitude = 0.0;
  bool amplitude_sqrt_rule = true;  // a = 10 / sqrt(N)
  int support_size = 6;
  double q = 0.1;
  std::vector<double> rho_grid;  // MVN axis
  std::vector<double> p0_grid;
  std::vector<int> n_grid;  // HMM axis; defaults to {n}
  MaskCandidates mask_mode = MaskCandidates::kTrueFeatures;
  int replicates = 31;
  std::uint64_t master_seed = 0;
  double response_shift = 0.0;
  int threads = 0;  // 0 = hardware concurrency

  double effective_amplitude(int n_obs) const;
  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& config);

struct TrialRecord {
  int grid_index = 0;
  double rho = 0.0;  // NaN for HMM grids
  double p0 = 0.0;
  int n = 0;
  int rep = 0;
  double fdp = 0.0;
  double power = 0.0;
  int n_selected = 0;
  double tau = 0.0;
  double lambda_cv = 0.0;
  std::uint64_t seed = 0;
  std::int64_t wall_ms = 0;
  std::string status = "ok";
};

struct GridSummary {
  double rho = 0.0;
  double p0 = 0.0;
  int n = 0;
  double mean_fdp = 0.0;
  double se_fdp = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  int n_ok = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<int> s_star;
  std::vector<TrialRecord> trials;   // ordered by (grid point, replicate)
  std::vector<GridSummary> summary;  // one row per grid point
  std::int64_t total_wall_ms = 0;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Runs the full grid x replicate schedule on a thread pool. Each trial is a
// pure function of (master_seed, grid_index, replicate), so results do not
// depend on the thread count. Per-trial failures are recorded in the
// status column; more than 5% failures aborts.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ProgressFn& progress = {});

// Writes trials.csv, summary.csv and run.json. Files are byte-deterministic
// for a fixed (config, master_seed): the wall_ms column is emitted as 0 and
// timing telemetry goes to run.json instead.
void emit_results(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace mxmiss
