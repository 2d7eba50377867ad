// gtbp: run tracking experiments, timing sweeps and print preset configs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gtbp/config.hpp"
#include "gtbp/experiment.hpp"

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigFailure = 2;

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gtbp::ConfigError("values", "'" + item + "' is not a number");
    }
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int runs, long long seed) {
  gtbp::ExperimentConfig config = gtbp::load_config(config_path);
  if (runs > 0) config.runs = runs;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  config.validate();
  const auto workers = gtbp::default_workers();
  std::cerr << "running " << config.methods.size() << " method(s) x " << config.runs << " run(s), "
            << config.effective_steps() << " steps, " << workers << " worker(s)\n";
  const auto result = gtbp::run_experiment(config, workers);
  gtbp::write_experiment(out_dir, result, config.record_timings);
  std::cerr << "wrote " << (std::filesystem::path(out_dir) / "metrics.csv").string() << "\n";
  return 0;
}

int cmd_bench(const std::string& sweep, const std::string& values, const std::string& out_dir, int runs,
              int steps, int warmup, std::size_t particles, long long seed) {
  gtbp::BenchConfig config;
  config.sweep = gtbp::parse_sweep(sweep);
  config.values = parse_values(values);
  config.runs = runs;
  config.timed_steps = steps;
  config.warmup_steps = warmup;
  config.particles = particles;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  const auto result = gtbp::run_bench(config);
  std::filesystem::create_directories(out_dir);
  gtbp::write_atomic(std::filesystem::path(out_dir) / "bench.csv", gtbp::bench_csv(result));
  gtbp::write_atomic(std::filesystem::path(out_dir) / "bench_fit.csv", gtbp::bench_fit_csv(result));
  std::printf("linear  slope %.6g ms/unit  R^2 %.4f\n", result.linear.slope, result.linear.r2);
  std::printf("log-log slope %.4f  R^2 %.4f\n", result.loglog.slope, result.loglog.r2);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-target tracking experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int runs = 0;
  long long seed = -1;
  auto* run = app.add_subcommand("run", "Monte Carlo tracking experiment");
  run->add_option("--config", config_path, "YAML or JSON experiment file")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--runs", runs, "override the run count");
  run->add_option("--seed", seed, "override the base seed");

  std::string sweep;
  std::string values;
  std::string bench_out = ".";
  int bench_runs = 1;
  int bench_steps = 10;
  int bench_warmup = 10;
  std::size_t particles = 1000;
  auto* bench = app.add_subcommand("bench", "runtime sweep");
  bench->add_option("--sweep", sweep, "m, clutter or targets")->required();
  bench->add_option("--values", values, "comma separated sweep values")->required();
  bench->add_option("--out", bench_out, "directory for bench.csv");
  bench->add_option("--runs", bench_runs, "runs per value");
  bench->add_option("--steps", bench_steps, "timed steps per run");
  bench->add_option("--warmup", bench_warmup, "untimed steps before timing");
  bench->add_option("--particles", particles, "particles per track");
  bench->add_option("--seed", seed, "base seed");

  std::string preset;
  auto* show = app.add_subcommand("preset", "print a built-in experiment config");
  show->add_option("--name", preset, "scenario1 or scenario2")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, runs, seed);
    if (*bench) {
      return cmd_bench(sweep, values, bench_out, bench_runs, bench_steps, bench_warmup, particles, seed);
    }
    std::cout << gtbp::preset_text(preset);
    return 0;
  } catch (const gtbp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const gtbp::RunError& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
