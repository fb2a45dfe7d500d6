#include "chanlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "chanlab/estimators.hpp"

namespace chanlab {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kLinearSnr: return "linear_snr";
    case ExperimentKind::kWidthSweep: return "width_sweep";
    case ExperimentKind::kTrainsizeSweep: return "trainsize_sweep";
    case ExperimentKind::kNonlinearSnr: return "nonlinear_snr";
    case ExperimentKind::kMismatchSnr: return "mismatch_snr";
    case ExperimentKind::kMismatchEta: return "mismatch_eta";
  }
  throw ConfigError("unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "linear_snr") return ExperimentKind::kLinearSnr;
  if (name == "width_sweep") return ExperimentKind::kWidthSweep;
  if (name == "trainsize_sweep") return ExperimentKind::kTrainsizeSweep;
  if (name == "nonlinear_snr") return ExperimentKind::kNonlinearSnr;
  if (name == "mismatch_snr") return ExperimentKind::kMismatchSnr;
  if (name == "mismatch_eta") return ExperimentKind::kMismatchEta;
  throw ConfigError("unknown experiment '" + name + "'");
}

double snr_db_to_sigma_n2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::kMismatchSnr:
      c.d = 1;
      break;
    case ExperimentKind::kMismatchEta:
      c.d = 1;
      c.snr_db_grid = {0, 25};
      break;
    default:
      break;
  }
  c.out_path = to_string(kind) + ".csv";
  return c;
}

void ExperimentConfig::validate() const {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (snr_db_grid.empty()) throw ConfigError("snr_db grid must be nonempty");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (train_size < 1 || test_size < 1) throw ConfigError("train_size and test_size must be >= 1");
  if (hidden_widths.empty()) throw ConfigError("hidden_widths must be nonempty");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (mc_trials < 1000) throw ConfigError("mc_trials must be >= 1000");
  if (!(rapp.x_sat > 0.0)) throw ConfigError("rapp_xsat must be positive");
  if (!(rapp.omega >= 1.0)) throw ConfigError("rapp_omega must be >= 1");
  if (out_path.empty()) throw ConfigError("out path must be nonempty");
  switch (experiment) {
    case ExperimentKind::kWidthSweep:
      if (width_grid.empty()) throw ConfigError("widths grid must be nonempty");
      for (int w : width_grid)
        if (w < 1) throw ConfigError("widths must be >= 1");
      break;
    case ExperimentKind::kTrainsizeSweep:
      if (trainsize_grid.empty()) throw ConfigError("sizes grid must be nonempty");
      for (long s : trainsize_grid)
        if (s < 1) throw ConfigError("sizes must be >= 1");
      break;
    case ExperimentKind::kMismatchSnr:
      if (d != 1) throw ConfigError("mismatch_snr requires d = 1");
      break;
    case ExperimentKind::kMismatchEta:
      if (d != 1) throw ConfigError("mismatch_eta requires d = 1");
      if (eta_grid.empty()) throw ConfigError("eta_grid must be nonempty");
      for (double e : eta_grid)
        if (!(e > 0.0)) throw ConfigError("eta_grid values must be positive");
      break;
    default:
      break;
  }
  try {
    train.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, int line) {
  throw ConfigError("bad value for key '" + key + "' at line " + std::to_string(line));
}

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, line);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, line);
  }
}

long parse_long(const std::string& v, const std::string& key, int line) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) bad_value(key, line);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, line);
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key, int line) {
  try {
    size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) bad_value(key, line);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, line);
  }
}

bool parse_bool(const std::string& v, const std::string& key, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, line);
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value, int line) {
  if (key == "experiment") {
    const ExperimentKind kind = experiment_kind_from_string(value);
    if (kind != c.experiment)
      throw ConfigError("experiment '" + value + "' at line " + std::to_string(line) +
                        " conflicts with '" + to_string(c.experiment) + "'");
  } else if (key == "d") {
    c.d = static_cast<int>(parse_long(value, key, line));
  } else if (key == "sigma2") {
    c.sigma2 = parse_double(value, key, line);
  } else if (key == "snr_db") {
    c.snr_db_grid.clear();
    for (const auto& p : split_list(value)) c.snr_db_grid.push_back(parse_double(p, key, line));
  } else if (key == "widths") {
    c.width_grid.clear();
    for (const auto& p : split_list(value))
      c.width_grid.push_back(static_cast<int>(parse_long(p, key, line)));
  } else if (key == "sizes") {
    c.trainsize_grid.clear();
    for (const auto& p : split_list(value)) c.trainsize_grid.push_back(parse_long(p, key, line));
  } else if (key == "eta_grid") {
    c.eta_grid.clear();
    for (const auto& p : split_list(value)) c.eta_grid.push_back(parse_double(p, key, line));
  } else if (key == "eta") {
    c.eta = parse_double(value, key, line);
  } else if (key == "train_size") {
    c.train_size = parse_long(value, key, line);
  } else if (key == "test_size") {
    c.test_size = parse_long(value, key, line);
  } else if (key == "hidden_widths") {
    c.hidden_widths.clear();
    for (const auto& p : split_list(value))
      c.hidden_widths.push_back(static_cast<int>(parse_long(p, key, line)));
  } else if (key == "optimizer") {
    if (value == "adam")
      c.train.optimizer = Optimizer::kAdam;
    else if (value == "sgd")
      c.train.optimizer = Optimizer::kSgd;
    else
      bad_value(key, line);
  } else if (key == "learning_rate") {
    c.train.learning_rate = parse_double(value, key, line);
  } else if (key == "batch_size") {
    c.train.batch_size = static_cast<int>(parse_long(value, key, line));
  } else if (key == "epochs") {
    c.train.epochs = static_cast<int>(parse_long(value, key, line));
  } else if (key == "shuffle") {
    c.train.shuffle = parse_bool(value, key, line);
  } else if (key == "adam_beta1") {
    c.train.beta1 = parse_double(value, key, line);
  } else if (key == "adam_beta2") {
    c.train.beta2 = parse_double(value, key, line);
  } else if (key == "adam_eps") {
    c.train.eps = parse_double(value, key, line);
  } else if (key == "rapp_xsat") {
    c.rapp.x_sat = parse_double(value, key, line);
  } else if (key == "rapp_omega") {
    c.rapp.omega = parse_double(value, key, line);
  } else if (key == "mc_trials") {
    c.mc_trials = parse_long(value, key, line);
  } else if (key == "seed") {
    c.seed = parse_u64(value, key, line);
  } else if (key == "seeds") {
    c.seeds = static_cast<int>(parse_long(value, key, line));
  } else if (key == "threads") {
    c.threads = static_cast<int>(parse_long(value, key, line));
  } else if (key == "out") {
    c.out_path = value;
  } else {
    throw ConfigError("unknown key '" + key + "' at line " + std::to_string(line));
  }
}

struct KvLine {
  std::string key;
  std::string value;
  int line;
};

std::vector<KvLine> read_kv_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::vector<KvLine> out;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value' at line " + std::to_string(line));
    KvLine kv;
    kv.key = trim(text.substr(0, eq));
    kv.value = trim(text.substr(eq + 1));
    kv.line = line;
    if (kv.key.empty()) throw ConfigError("empty key at line " + std::to_string(line));
    out.push_back(std::move(kv));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  const auto lines = read_kv_lines(path);
  const auto exp_it = std::find_if(lines.begin(), lines.end(),
                                   [](const KvLine& kv) { return kv.key == "experiment"; });
  if (exp_it == lines.end()) throw ConfigError("missing required key 'experiment' in " + path);
  ExperimentConfig config = default_config(experiment_kind_from_string(exp_it->value));
  for (const auto& kv : lines) apply_key(config, kv.key, kv.value, kv.line);
  config.validate();
  return config;
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  for (const auto& kv : read_kv_lines(path)) apply_key(config, kv.key, kv.value, kv.line);
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::string fmt_list_d(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt_g(v[i], 17);
  }
  return s;
}

template <typename T>
std::string fmt_list_i(const std::vector<T>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

std::string format_config(const ExperimentConfig& c) {
  std::string s;
  s += "experiment = " + to_string(c.experiment) + "\n";
  s += "d = " + std::to_string(c.d) + "\n";
  s += "sigma2 = " + fmt_g(c.sigma2, 17) + "\n";
  s += "snr_db = " + fmt_list_d(c.snr_db_grid) + "\n";
  s += "widths = " + fmt_list_i(c.width_grid) + "\n";
  s += "sizes = " + fmt_list_i(c.trainsize_grid) + "\n";
  s += "eta_grid = " + fmt_list_d(c.eta_grid) + "\n";
  s += "eta = " + fmt_g(c.eta, 17) + "\n";
  s += "train_size = " + std::to_string(c.train_size) + "\n";
  s += "test_size = " + std::to_string(c.test_size) + "\n";
  s += "hidden_widths = " + fmt_list_i(c.hidden_widths) + "\n";
  s += std::string("optimizer = ") + (c.train.optimizer == Optimizer::kAdam ? "adam" : "sgd") + "\n";
  s += "learning_rate = " + fmt_g(c.train.learning_rate, 17) + "\n";
  s += "batch_size = " + std::to_string(c.train.batch_size) + "\n";
  s += "epochs = " + std::to_string(c.train.epochs) + "\n";
  s += std::string("shuffle = ") + (c.train.shuffle ? "true" : "false") + "\n";
  s += "adam_beta1 = " + fmt_g(c.train.beta1, 17) + "\n";
  s += "adam_beta2 = " + fmt_g(c.train.beta2, 17) + "\n";
  s += "adam_eps = " + fmt_g(c.train.eps, 17) + "\n";
  s += "rapp_xsat = " + fmt_g(c.rapp.x_sat, 17) + "\n";
  s += "rapp_omega = " + fmt_g(c.rapp.omega, 17) + "\n";
  s += "mc_trials = " + std::to_string(c.mc_trials) + "\n";
  s += "seed = " + std::to_string(c.seed) + "\n";
  s += "seeds = " + std::to_string(c.seeds) + "\n";
  s += "threads = " + std::to_string(c.threads) + "\n";
  s += "out = " + c.out_path + "\n";
  return s;
}

void write_effective_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open config echo for writing: " + path);
  os << format_config(config);
  if (!os) throw std::runtime_error("config echo write failed: " + path);
}

std::string effective_config_path(const std::string& out_path) { return out_path + ".config"; }

void write_results(const std::vector<SweepRow>& rows, const std::string& path) {
  if (rows.empty()) throw std::runtime_error("nothing to write");
  std::vector<SweepRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.sweep_var != b.sweep_var) return a.sweep_var < b.sweep_var;
    return a.estimator < b.estimator;
  });
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open results file for writing: " + path);
  os << "sweep_var,estimator,empirical_mse,theory_mse,seed\n";
  for (const auto& r : sorted) {
    os << fmt_g(r.sweep_var, 12) << ',' << r.estimator << ',' << fmt_g(r.empirical_mse, 12) << ',';
    if (r.theory_mse) os << fmt_g(*r.theory_mse, 12);
    os << ',' << r.seed << '\n';
  }
  if (!os) throw std::runtime_error("results write failed: " + path);
}

// ---------------------------------------------------------------------------
// Sweep execution
// ---------------------------------------------------------------------------

namespace {

struct RowTriple {
  std::string estimator;
  double empirical = 0.0;
  std::optional<double> theory;
};

// One unit of work: a (sweep point, seed repetition) pair.
struct JobResult {
  std::vector<RowTriple> rows;
};

void run_jobs(int threads, long n_jobs, const std::function<void(long)>& fn) {
  if (threads <= 1 || n_jobs <= 1) {
    for (long i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n_jobs));
  std::vector<std::thread> pool;
  const int n_threads = static_cast<int>(std::min<long>(threads, n_jobs));
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n_jobs) return;
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Per-job random sub-streams; 256 sub-uses per job.
enum StreamUse : std::uint64_t {
  kStreamTrainData = 0,
  kStreamTestData = 1,
  kStreamTrainSeed = 2,
  kStreamMonteCarlo = 3,
};

std::uint64_t job_stream(long job_index, StreamUse use) {
  return (static_cast<std::uint64_t>(job_index) << 8) | use;
}

MlpSpec spec_for(const ExperimentConfig& cfg, int width_override = 0) {
  MlpSpec spec;
  spec.widths.push_back(cfg.d);
  for (int w : cfg.hidden_widths) spec.widths.push_back(width_override > 0 ? width_override : w);
  spec.widths.push_back(cfg.d);
  return spec;
}

MlpParams train_dl(const ExperimentConfig& cfg, const MlpSpec& spec, const SampleSet& train_set,
                   long job_index) {
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed(cfg.seed, job_stream(job_index, kStreamTrainSeed));
  return train(spec, train_set, tc).first;
}

std::function<Vec(const Vec&)> net_predictor(const MlpParams& params) {
  return [&params](const Vec& x) { return forward(params, x); };
}

// Aggregate per-point repetition rows into the final sweep rows
// (mean empirical MSE over seed repetitions; theory from the first).
std::vector<SweepRow> aggregate(const ExperimentConfig& cfg, const std::vector<double>& sweep_vars,
                                const std::vector<std::vector<JobResult>>& by_point) {
  std::vector<SweepRow> rows;
  for (size_t p = 0; p < by_point.size(); ++p) {
    const auto& reps = by_point[p];
    for (size_t k = 0; k < reps[0].rows.size(); ++k) {
      SweepRow row;
      row.sweep_var = sweep_vars[p];
      row.estimator = reps[0].rows[k].estimator;
      row.theory_mse = reps[0].rows[k].theory;
      double acc = 0.0;
      for (const auto& rep : reps) acc += rep.rows[k].empirical;
      row.empirical_mse = acc / static_cast<double>(reps.size());
      row.seed = cfg.seed;
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.sweep_var != b.sweep_var) return a.sweep_var < b.sweep_var;
    return a.estimator < b.estimator;
  });
  return rows;
}

// Runs fn(point, rep, job_index) over the sweep grid, in parallel when
// configured, with deterministic assembly.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::vector<double>& sweep_vars,
                            const std::function<JobResult(long, int, long)>& fn) {
  const long n_points = static_cast<long>(sweep_vars.size());
  const long n_jobs = n_points * cfg.seeds;
  std::vector<std::vector<JobResult>> by_point(n_points,
                                               std::vector<JobResult>(cfg.seeds));
  run_jobs(cfg.threads, n_jobs, [&](long j) {
    const long point = j / cfg.seeds;
    const int rep = static_cast<int>(j % cfg.seeds);
    by_point[point][static_cast<size_t>(rep)] = fn(point, rep, j);
  });
  return aggregate(cfg, sweep_vars, by_point);
}

std::string fmt_snr_suffix(double snr_db) { return "_snr" + fmt_g(snr_db, 12); }

[[noreturn]] void annotate_and_rethrow(const std::string& context) {
  try {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(context + ": " + e.what());
  }
}

}  // namespace

std::vector<SweepRow> run_linear_snr(const ExperimentConfig& cfg) {
  cfg.validate();
  const CovarianceSpec cov = CovarianceSpec::diagonal(cfg.sigma2);
  return sweep(cfg, cfg.snr_db_grid, [&](long point, int, long job) -> JobResult {
    const double snr_db = cfg.snr_db_grid[static_cast<size_t>(point)];
    try {
      ObservationModel model;
      model.sigma_n2 = snr_db_to_sigma_n2(snr_db);
      Rng train_rng(cfg.seed, job_stream(job, kStreamTrainData));
      const SampleSet train_set = gen_dataset(cov, model, cfg.d, cfg.train_size, train_rng);
      Rng test_rng(cfg.seed, job_stream(job, kStreamTestData));
      const SampleSet test_set = gen_dataset(cov, model, cfg.d, cfg.test_size, test_rng);

      const MlpParams net = train_dl(cfg, spec_for(cfg), train_set, job);

      JobResult out;
      out.rows.push_back({"dl", empirical_mse(net_predictor(net), test_set).empirical_mse,
                          std::nullopt});
      out.rows.push_back(
          {"lmmse",
           empirical_mse([&](const Vec& x) { return lmmse_estimate(x, cov, model.sigma_n2, model.tau); },
                         test_set)
               .empirical_mse,
           lmmse_mse_theory(cov, cfg.d, model.sigma_n2)});
      out.rows.push_back(
          {"ls",
           empirical_mse([&](const Vec& x) { return ls_estimate(x, model.tau); }, test_set)
               .empirical_mse,
           ls_mse_theory(cfg.d, model.sigma_n2)});
      return out;
    } catch (...) {
      annotate_and_rethrow("linear_snr at snr_db=" + fmt_g(snr_db, 12));
    }
  });
}

std::vector<SweepRow> run_width_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const CovarianceSpec cov = CovarianceSpec::diagonal(cfg.sigma2);
  // Jobs are (width, snr) pairs; rows fold the SNR into the estimator name.
  std::vector<std::pair<int, double>> grid;
  for (int w : cfg.width_grid)
    for (double s : cfg.snr_db_grid) grid.emplace_back(w, s);
  std::vector<double> sweep_vars;
  sweep_vars.reserve(grid.size());
  for (const auto& g : grid) sweep_vars.push_back(static_cast<double>(g.first));

  return sweep(cfg, sweep_vars, [&](long point, int, long job) -> JobResult {
    const auto [width, snr_db] = grid[static_cast<size_t>(point)];
    try {
      ObservationModel model;
      model.sigma_n2 = snr_db_to_sigma_n2(snr_db);
      Rng train_rng(cfg.seed, job_stream(job, kStreamTrainData));
      const SampleSet train_set = gen_dataset(cov, model, cfg.d, cfg.train_size, train_rng);
      Rng test_rng(cfg.seed, job_stream(job, kStreamTestData));
      const SampleSet test_set = gen_dataset(cov, model, cfg.d, cfg.test_size, test_rng);

      const MlpParams net = train_dl(cfg, spec_for(cfg, width), train_set, job);
      JobResult out;
      out.rows.push_back({"dl" + fmt_snr_suffix(snr_db),
                          empirical_mse(net_predictor(net), test_set).empirical_mse,
                          lmmse_mse_theory(cov, cfg.d, model.sigma_n2)});
      return out;
    } catch (...) {
      annotate_and_rethrow("width_sweep at width=" + std::to_string(width) +
                           " snr_db=" + fmt_g(snr_db, 12));
    }
  });
}

std::vector<SweepRow> run_trainsize_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const CovarianceSpec cov = CovarianceSpec::diagonal(cfg.sigma2);
  std::vector<std::pair<long, double>> grid;
  for (long n : cfg.trainsize_grid)
    for (double s : cfg.snr_db_grid) grid.emplace_back(n, s);
  std::vector<double> sweep_vars;
  sweep_vars.reserve(grid.size());
  for (const auto& g : grid) sweep_vars.push_back(static_cast<double>(g.first));

  return sweep(cfg, sweep_vars, [&](long point, int, long job) -> JobResult {
    const auto [train_n, snr_db] = grid[static_cast<size_t>(point)];
    try {
      ObservationModel model;
      model.sigma_n2 = snr_db_to_sigma_n2(snr_db);
      Rng train_rng(cfg.seed, job_stream(job, kStreamTrainData));
      const SampleSet train_set = gen_dataset(cov, model, cfg.d, train_n, train_rng);
      Rng test_rng(cfg.seed, job_stream(job, kStreamTestData));
      const SampleSet test_set = gen_dataset(cov, model, cfg.d, cfg.test_size, test_rng);

      const MlpParams net = train_dl(cfg, spec_for(cfg), train_set, job);
      JobResult out;
      out.rows.push_back({"dl" + fmt_snr_suffix(snr_db),
                          empirical_mse(net_predictor(net), test_set).empirical_mse,
                          lmmse_mse_theory(cov, cfg.d, model.sigma_n2)});
      return out;
    } catch (...) {
      annotate_and_rethrow("trainsize_sweep at size=" + std::to_string(train_n) +
                           " snr_db=" + fmt_g(snr_db, 12));
    }
  });
}

std::vector<SweepRow> run_nonlinear_snr(const ExperimentConfig& cfg) {
  cfg.validate();
  const CovarianceSpec cov = CovarianceSpec::diagonal(cfg.sigma2);
  return sweep(cfg, cfg.snr_db_grid, [&](long point, int, long job) -> JobResult {
    const double snr_db = cfg.snr_db_grid[static_cast<size_t>(point)];
    try {
      ObservationModel model;
      model.sigma_n2 = snr_db_to_sigma_n2(snr_db);
      model.distortion = DistortionKind::kRapp;
      model.rapp = cfg.rapp;
      Rng train_rng(cfg.seed, job_stream(job, kStreamTrainData));
      const SampleSet train_set = gen_dataset(cov, model, cfg.d, cfg.train_size, train_rng);
      Rng test_rng(cfg.seed, job_stream(job, kStreamTestData));
      const SampleSet test_set = gen_dataset(cov, model, cfg.d, cfg.test_size, test_rng);

      const MlpParams net = train_dl(cfg, spec_for(cfg), train_set, job);

      JobResult out;
      out.rows.push_back({"dl", empirical_mse(net_predictor(net), test_set).empirical_mse,
                          std::nullopt});
      out.rows.push_back(
          {"lmmse",
           empirical_mse([&](const Vec& x) { return lmmse_estimate(x, cov, model.sigma_n2, model.tau); },
                         test_set)
               .empirical_mse,
           std::nullopt});
      out.rows.push_back(
          {"mmse_semi",
           empirical_mse(
               [&](const Vec& x) { return mmse_rapp_semianalytic(x, cov, model, model.tau); },
               test_set)
               .empirical_mse,
           std::nullopt});

      // Monte Carlo MMSE on a capped test subset (desk-scale trial count).
      const long mc_points = std::min<long>(500, test_set.size());
      SampleSet mc_subset;
      mc_subset.x = test_set.x.leftCols(mc_points);
      mc_subset.h = test_set.h.leftCols(mc_points);
      Rng mc_rng(cfg.seed, job_stream(job, kStreamMonteCarlo));
      out.rows.push_back(
          {"mmse_mc",
           empirical_mse(
               [&](const Vec& x) { return mmse_monte_carlo(x, cov, model, cfg.mc_trials, mc_rng); },
               mc_subset)
               .empirical_mse,
           std::nullopt});
      return out;
    } catch (...) {
      annotate_and_rethrow("nonlinear_snr at snr_db=" + fmt_g(snr_db, 12));
    }
  });
}

namespace {

// Shared single-point evaluation for the mismatch experiments.
JobResult mismatch_point(const ExperimentConfig& cfg, double eta, double snr_db, long job,
                         const std::string& suffix) {
  const int d = cfg.d;
  const double s2 = cfg.sigma2;
  ObservationModel model;
  model.sigma_n2 = snr_db_to_sigma_n2(snr_db);
  const CovarianceSpec cov_true = CovarianceSpec::diagonal(s2);
  const CovarianceSpec cov_assumed = CovarianceSpec::diagonal(eta * s2);

  // Training data: case 1 widens the channel by an additive error with
  // covariance (eta-1) s2 I; case 2 narrows it to eta s2 I directly.
  SampleSet train_set;
  Rng train_rng(cfg.seed, job_stream(job, kStreamTrainData));
  if (eta >= 1.0) {
    MismatchSpec mm;
    mm.mcase = MismatchCase::kCase1;
    mm.zeta_cov = CovarianceSpec::full((eta - 1.0) * s2 * Mat::Identity(d, d));
    train_set = gen_mismatched_dataset(cov_true, mm, model, d, cfg.train_size, train_rng);
  } else {
    MismatchSpec mm;
    mm.mcase = MismatchCase::kCase2;
    mm.zeta_cov = CovarianceSpec::full((1.0 - eta) * s2 * Mat::Identity(d, d));
    train_set = gen_mismatched_dataset(cov_assumed, mm, model, d, cfg.train_size, train_rng);
  }

  // Deployment data always follows the true channel statistics.
  Rng test_rng(cfg.seed, job_stream(job, kStreamTestData));
  const SampleSet test_set = gen_dataset(cov_true, model, d, cfg.test_size, test_rng);

  const MlpParams net = train_dl(cfg, spec_for(cfg), train_set, job);

  const std::vector<double> err2(static_cast<size_t>(d), (eta - 1.0) * s2);

  JobResult out;
  out.rows.push_back(
      {"dl_mismatched" + suffix, empirical_mse(net_predictor(net), test_set).empirical_mse,
       eta >= 1.0 ? std::optional<double>(dl_er_mse_diag(d, s2, err2, model.sigma_n2))
                  : std::nullopt});
  out.rows.push_back(
      {"lmmse_mismatched" + suffix,
       empirical_mse(
           [&](const Vec& x) { return lmmse_mismatched_estimate(x, cov_assumed, model.sigma_n2, model.tau); },
           test_set)
           .empirical_mse,
       lm_er_mse_diag(d, s2, err2, model.sigma_n2)});
  out.rows.push_back(
      {"lmmse_accurate" + suffix,
       empirical_mse(
           [&](const Vec& x) { return lmmse_estimate(x, cov_true, model.sigma_n2, model.tau); },
           test_set)
           .empirical_mse,
       lmmse_mse_theory(cov_true, d, model.sigma_n2)});
  out.rows.push_back(
      {"ls" + suffix,
       empirical_mse([&](const Vec& x) { return ls_estimate(x, model.tau); }, test_set)
           .empirical_mse,
       ls_mse_theory(d, model.sigma_n2)});
  return out;
}

}  // namespace

std::vector<SweepRow> run_mismatch_snr(const ExperimentConfig& cfg) {
  cfg.validate();
  return sweep(cfg, cfg.snr_db_grid, [&](long point, int, long job) -> JobResult {
    const double snr_db = cfg.snr_db_grid[static_cast<size_t>(point)];
    try {
      return mismatch_point(cfg, cfg.eta, snr_db, job, "");
    } catch (...) {
      annotate_and_rethrow("mismatch_snr at snr_db=" + fmt_g(snr_db, 12));
    }
  });
}

std::vector<SweepRow> run_mismatch_eta(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<double, double>> grid;
  for (double e : cfg.eta_grid)
    for (double s : cfg.snr_db_grid) grid.emplace_back(e, s);
  std::vector<double> sweep_vars;
  sweep_vars.reserve(grid.size());
  for (const auto& g : grid) sweep_vars.push_back(g.first);

  return sweep(cfg, sweep_vars, [&](long point, int, long job) -> JobResult {
    const auto [eta, snr_db] = grid[static_cast<size_t>(point)];
    try {
      return mismatch_point(cfg, eta, snr_db, job, fmt_snr_suffix(snr_db));
    } catch (...) {
      annotate_and_rethrow("mismatch_eta at eta=" + fmt_g(eta, 12) +
                           " snr_db=" + fmt_g(snr_db, 12));
    }
  });
}

std::vector<SweepRow> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::kLinearSnr: return run_linear_snr(cfg);
    case ExperimentKind::kWidthSweep: return run_width_sweep(cfg);
    case ExperimentKind::kTrainsizeSweep: return run_trainsize_sweep(cfg);
    case ExperimentKind::kNonlinearSnr: return run_nonlinear_snr(cfg);
    case ExperimentKind::kMismatchSnr: return run_mismatch_snr(cfg);
    case ExperimentKind::kMismatchEta: return run_mismatch_eta(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace chanlab
