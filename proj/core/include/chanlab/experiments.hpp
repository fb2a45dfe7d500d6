#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanlab/relu_net.hpp"

namespace chanlab {

/// Configuration problems (bad keys, bad values, inconsistent settings).
/// The CLI maps these to exit code 1; numerical failures exit with 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  kLinearSnr,
  kWidthSweep,
  kTrainsizeSweep,
  kNonlinearSnr,
  kMismatchSnr,
  kMismatchEta,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kLinearSnr;
  int d = 2;
  double sigma2 = 1.0;  // element-wise channel variance
  std::vector<double> snr_db_grid = {0, 5, 10, 15, 20, 25};
  std::vector<int> width_grid = {1, 2, 4, 8, 16, 32, 64};
  std::vector<long> trainsize_grid = {50, 200, 1000, 5000, 10000};
  std::vector<double> eta_grid = {0.2, 0.5, 1.0, 2.0, 5.0};
  double eta = 2.0;
  long train_size = 20000;
  long test_size = 5000;
  std::vector<int> hidden_widths = {40, 40, 40, 40};
  TrainConfig train;
  RappParams rapp{1.5, 1.0};
  long mc_trials = 100000;
  std::uint64_t seed = 1;
  int seeds = 1;
  int threads = 1;
  std::string out_path;

  bool operator==(const ExperimentConfig&) const = default;
  void validate() const;  // throws ConfigError
};

struct SweepRow {
  double sweep_var = 0.0;
  std::string estimator;
  double empirical_mse = 0.0;
  std::optional<double> theory_mse;
  std::uint64_t seed = 0;
};

/// Defaults for one experiment kind (grids, sizes, out path).
ExperimentConfig default_config(ExperimentKind kind);

/// Parse a flat "key = value" config file (# comments). The experiment
/// key is required. Unknown keys and malformed values raise ConfigError
/// naming the key and line.
ExperimentConfig parse_config_file(const std::string& path);

/// Apply a config file on top of an existing config. A present experiment
/// key must match config.experiment.
void apply_config_file(ExperimentConfig& config, const std::string& path);

/// SNR convention: SNR = 1/sigma_n2, so sigma_n2 = 10^(-snr_db/10).
double snr_db_to_sigma_n2(double snr_db);

std::vector<SweepRow> run_experiment(const ExperimentConfig& config);
std::vector<SweepRow> run_linear_snr(const ExperimentConfig& config);
std::vector<SweepRow> run_width_sweep(const ExperimentConfig& config);
std::vector<SweepRow> run_trainsize_sweep(const ExperimentConfig& config);
std::vector<SweepRow> run_nonlinear_snr(const ExperimentConfig& config);
std::vector<SweepRow> run_mismatch_snr(const ExperimentConfig& config);
std::vector<SweepRow> run_mismatch_eta(const ExperimentConfig& config);

/// CSV with header sweep_var,estimator,empirical_mse,theory_mse,seed,
/// rows ordered by (sweep_var, estimator), LF endings, 12 significant
/// digits. Throws on empty rows ("nothing to write") and I/O errors.
void write_results(const std::vector<SweepRow>& rows, const std::string& path);

/// Reparseable echo of the effective configuration.
std::string format_config(const ExperimentConfig& config);
void write_effective_config(const ExperimentConfig& config, const std::string& path);

/// Path of the effective-config echo written beside the results file.
std::string effective_config_path(const std::string& out_path);

}  // namespace chanlab
