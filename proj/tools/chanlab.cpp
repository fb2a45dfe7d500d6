// chanlab: channel-estimation experiment runner.
//
// chanlab <experiment> [--config PATH] [--d N] [--snr-db LIST] [--eta X]
//         [--train-size N] [--test-size N] [--seed N] [--seeds N]
//         [--threads N] [--out PATH] ...
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chanlab/experiments.hpp"

namespace {

struct Flags {
  std::string config_path;
  int d = 0;
  double sigma2 = 0.0;
  std::vector<double> snr_db;
  std::vector<int> widths;
  std::vector<long> sizes;
  std::vector<double> eta_grid;
  double eta = 0.0;
  long train_size = 0;
  long test_size = 0;
  std::vector<int> hidden_widths;
  std::string optimizer;
  double learning_rate = 0.0;
  int batch_size = 0;
  int epochs = -1;
  long mc_trials = 0;
  double rapp_xsat = 0.0;
  double rapp_omega = 0.0;
  std::uint64_t seed = 0;
  int seeds = 0;
  int threads = 0;
  std::string out;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "flat key = value config file");
  sub->add_option("--d", f.d, "number of antennas");
  sub->add_option("--sigma2", f.sigma2, "channel element variance");
  sub->add_option("--snr-db", f.snr_db, "SNR grid in dB")->delimiter(',');
  sub->add_option("--widths", f.widths, "hidden width grid (width_sweep)")->delimiter(',');
  sub->add_option("--sizes", f.sizes, "training-set size grid (trainsize_sweep)")->delimiter(',');
  sub->add_option("--eta-grid", f.eta_grid, "eta grid (mismatch_eta)")->delimiter(',');
  sub->add_option("--eta", f.eta, "covariance scaling coefficient");
  sub->add_option("--train-size", f.train_size, "training samples per sweep point");
  sub->add_option("--test-size", f.test_size, "test samples per sweep point");
  sub->add_option("--hidden-widths", f.hidden_widths, "hidden layer widths")->delimiter(',');
  sub->add_option("--optimizer", f.optimizer, "adam or sgd");
  sub->add_option("--learning-rate", f.learning_rate, "optimizer step size");
  sub->add_option("--batch-size", f.batch_size, "mini-batch size");
  sub->add_option("--epochs", f.epochs, "training epochs");
  sub->add_option("--mc-trials", f.mc_trials, "Monte Carlo MMSE trials per test point");
  sub->add_option("--rapp-xsat", f.rapp_xsat, "Rapp saturation level");
  sub->add_option("--rapp-omega", f.rapp_omega, "Rapp smoothness factor");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--seeds", f.seeds, "seed repetitions averaged per sweep point");
  sub->add_option("--threads", f.threads, "worker threads across sweep points");
  sub->add_option("--out", f.out, "output CSV path");
}

// Flags override file values, which override defaults.
void merge_flags(const CLI::App* sub, const Flags& f, chanlab::ExperimentConfig& cfg) {
  if (sub->count("--d")) cfg.d = f.d;
  if (sub->count("--sigma2")) cfg.sigma2 = f.sigma2;
  if (sub->count("--snr-db")) cfg.snr_db_grid = f.snr_db;
  if (sub->count("--widths")) cfg.width_grid = f.widths;
  if (sub->count("--sizes")) cfg.trainsize_grid = f.sizes;
  if (sub->count("--eta-grid")) cfg.eta_grid = f.eta_grid;
  if (sub->count("--eta")) cfg.eta = f.eta;
  if (sub->count("--train-size")) cfg.train_size = f.train_size;
  if (sub->count("--test-size")) cfg.test_size = f.test_size;
  if (sub->count("--hidden-widths")) cfg.hidden_widths = f.hidden_widths;
  if (sub->count("--optimizer")) {
    if (f.optimizer == "adam")
      cfg.train.optimizer = chanlab::Optimizer::kAdam;
    else if (f.optimizer == "sgd")
      cfg.train.optimizer = chanlab::Optimizer::kSgd;
    else
      throw chanlab::ConfigError("unknown optimizer '" + f.optimizer + "'");
  }
  if (sub->count("--learning-rate")) cfg.train.learning_rate = f.learning_rate;
  if (sub->count("--batch-size")) cfg.train.batch_size = f.batch_size;
  if (sub->count("--epochs")) cfg.train.epochs = f.epochs;
  if (sub->count("--mc-trials")) cfg.mc_trials = f.mc_trials;
  if (sub->count("--rapp-xsat")) cfg.rapp.x_sat = f.rapp_xsat;
  if (sub->count("--rapp-omega")) cfg.rapp.omega = f.rapp_omega;
  if (sub->count("--seed")) cfg.seed = f.seed;
  if (sub->count("--seeds")) cfg.seeds = f.seeds;
  if (sub->count("--threads")) cfg.threads = f.threads;
  if (sub->count("--out")) cfg.out_path = f.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chanlab: classical vs deep-learning channel estimation experiments"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, chanlab::ExperimentKind>> kinds = {
      {"linear_snr", chanlab::ExperimentKind::kLinearSnr},
      {"width_sweep", chanlab::ExperimentKind::kWidthSweep},
      {"trainsize_sweep", chanlab::ExperimentKind::kTrainsizeSweep},
      {"nonlinear_snr", chanlab::ExperimentKind::kNonlinearSnr},
      {"mismatch_snr", chanlab::ExperimentKind::kMismatchSnr},
      {"mismatch_eta", chanlab::ExperimentKind::kMismatchEta},
  };

  std::vector<Flags> flags(kinds.size());
  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i].first, "run the " + kinds[i].first + " sweep");
    add_flags(sub, flags[i]);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  size_t idx = 0;
  for (; idx < subs.size(); ++idx)
    if (subs[idx]->parsed()) break;

  chanlab::ExperimentConfig cfg;
  try {
    cfg = chanlab::default_config(kinds[idx].second);
    if (subs[idx]->count("--config")) chanlab::apply_config_file(cfg, flags[idx].config_path);
    merge_flags(subs[idx], flags[idx], cfg);
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "chanlab: config error: %s\n", e.what());
    return 1;
  }

  try {
    const auto rows = chanlab::run_experiment(cfg);
    chanlab::write_results(rows, cfg.out_path);
    chanlab::write_effective_config(cfg, chanlab::effective_config_path(cfg.out_path));
    std::fprintf(stderr, "chanlab: wrote %zu rows to %s\n", rows.size(), cfg.out_path.c_str());
  } catch (const chanlab::ConfigError& e) {
    std::fprintf(stderr, "chanlab: config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "chanlab: %s\n", e.what());
    return 2;
  }
  return 0;
}
