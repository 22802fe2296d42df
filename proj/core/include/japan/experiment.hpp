#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "japan/dataset.hpp"
#include "japan/flow.hpp"

namespace japan {

struct DatasetSpec {
  std::string kind = "toy";  // toy | conditional | csv
  std::string name = "moons";
  std::size_t n = 10000;
  double noise = 0.05;
  std::string path;
  std::vector<std::string> x_cols, y_cols;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<std::string> methods = {"original", "rect", "ellipse"};
  std::vector<double> epsilons = {0.1};
  std::vector<std::uint64_t> seeds = {0};
  TrainConfig flow;
  std::uint64_t mc_samples = 100000;            // context-free areas
  std::uint64_t mc_samples_per_context = 3000;  // conditional areas
  double ridge_lambda = 1e-3;
  std::size_t knn_k = 50;
  double train_frac = 0.6, cal_frac = 0.2, test_frac = 0.2;
  std::string out_dir = "results";
  bool destandardize = false;
  std::size_t area_context_cap = 0;  // 0 = average over every test context
  bool timings = false;              // keep the CSV byte-reproducible by default
  std::string cache_dir;

  // Unknown keys are a hard error; every field has a default.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

struct ExperimentResult {
  std::string dataset, method, variant;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double coverage = 0.0, area = 0.0, area_se = 0.0, train_nll = 0.0, seconds = 0.0;
  bool failed = false;
  std::string error_message;
};

struct SweepRow {
  std::string dataset, method, variant;
  double epsilon = 0.0, coverage = 0.0, area = 0.0, area_se = 0.0;
};

struct CompareRow {
  std::string dataset, method;
  std::size_t runs = 0;
  double coverage_mean = 0.0, coverage_std = 0.0;
  double area_mean = 0.0, area_std = 0.0;
};

// Caps worker threads with the JAPAN_THREADS environment variable.
unsigned resolve_threads(unsigned requested = 0);

// Runs every (seed, method, ε) cell. Training failures become error rows
// and the run continues. Results come back sorted; `echo` (when given)
// receives one JSON line per result.
std::vector<ExperimentResult> run_experiment(const ExperimentConfig& config, unsigned threads = 0,
                                             std::ostream* echo = nullptr);

// ε-sweep reusing one trained model per (seed, method); rows are per
// (method, ε) averaged over seeds.
std::vector<SweepRow> sweep_experiment(const ExperimentConfig& config, unsigned threads = 0,
                                       std::ostream* echo = nullptr);

// Per (dataset, method) mean ± sample std over seeds, sorted by mean area.
std::vector<CompareRow> compare_results(const std::string& results_csv);

void write_results_csv(const std::vector<ExperimentResult>& results, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out);
void print_compare_table(const std::vector<CompareRow>& rows, std::ostream& out);

// Materializes the configured dataset for one run seed: generate or load,
// split, standardize.
Dataset build_dataset(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace japan
