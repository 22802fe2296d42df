// Density-based conformal prediction experiments: train coupling flows,
// calibrate log-density thresholds, evaluate coverage and region areas.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "japan/dataset.hpp"
#include "japan/errors.hpp"
#include "japan/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::string& cache_dir) {
  japan::ExperimentConfig config = japan::ExperimentConfig::from_file(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (!cache_dir.empty()) config.cache_dir = cache_dir;
  const auto results = japan::run_experiment(config, 0, &std::cout);
  const auto csv_path = std::filesystem::path(config.out_dir) / "results.csv";
  japan::write_results_csv(results, csv_path.string());
  std::cerr << "wrote " << csv_path.string() << " (" << results.size() << " rows)\n";
  for (const auto& r : results) {
    if (r.failed) std::cerr << "cell failed: " << r.method << " seed " << r.seed << ": "
                            << r.error_message << '\n';
  }
  return 0;
}

int sweep_command(const std::string& config_path, const std::string& cache_dir) {
  japan::ExperimentConfig config = japan::ExperimentConfig::from_file(config_path);
  if (!cache_dir.empty()) config.cache_dir = cache_dir;
  const auto rows = japan::sweep_experiment(config, 0, &std::cout);
  const auto csv_path = std::filesystem::path(config.out_dir) / "sweep.csv";
  japan::write_sweep_csv(rows, csv_path.string());
  std::cerr << "wrote " << csv_path.string() << " (" << rows.size() << " rows)\n";
  return 0;
}

int compare_command(const std::string& results_path, const std::string& out_path) {
  const auto rows = japan::compare_results(results_path);
  japan::print_compare_table(rows, std::cout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw japan::Error("cannot open " + out_path + " for writing");
    japan::write_compare_csv(rows, out);
  } else {
    japan::write_compare_csv(rows, std::cout);
  }
  return 0;
}

int gen_command(const std::string& toy, std::size_t n, std::uint64_t seed, double noise,
                const std::string& out_path) {
  japan::Dataset data;
  if (toy == "conditional") {
    data = japan::generate_conditional(n, seed);
  } else {
    data = japan::generate_toy({toy, n, noise, seed});
  }
  japan::save_csv(data, out_path);
  std::cerr << "wrote " << out_path << " (" << data.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction regions from normalising-flow density scores"};
  app.require_subcommand(1);

  std::string config_path, out_dir, results_path, compare_out, cache_dir;
  std::string toy = "moons", gen_out = "toy.csv";
  std::size_t gen_n = 10000;
  std::uint64_t gen_seed = 0;
  double gen_noise = 0.05;

  auto* run = app.add_subcommand("run", "Run the experiment grid from a JSON config");
  run->add_option("--config", config_path, "JSON config path")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--cache-dir", cache_dir, "Dataset cache directory (overrides the config)");

  auto* sweep = app.add_subcommand("sweep", "Calibration-curve sweep over the epsilon grid");
  sweep->add_option("--config", config_path, "JSON config path")->required();
  sweep->add_option("--cache-dir", cache_dir, "Dataset cache directory (overrides the config)");

  auto* compare = app.add_subcommand("compare", "Summarise a results CSV per (dataset, method)");
  compare->add_option("--results", results_path, "results.csv path")->required();
  compare->add_option("--out", compare_out, "Summary CSV path (defaults to stdout)");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset as CSV");
  gen->add_option("--toy", toy, "moons|circles|checkerboard|spiral|crescent|conditional")
      ->required();
  gen->add_option("--n", gen_n, "Sample count");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--noise", gen_noise, "Noise level");
  gen->add_option("--out", gen_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return run_command(config_path, out_dir, cache_dir);
    if (sweep->parsed()) return sweep_command(config_path, cache_dir);
    if (compare->parsed()) return compare_command(results_path, compare_out);
    if (gen->parsed()) return gen_command(toy, gen_n, gen_seed, gen_noise, gen_out);
  } catch (const japan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const japan::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
