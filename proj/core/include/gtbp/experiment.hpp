#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtbp/config.hpp"

namespace gtbp {

/// One row of metrics.csv.
struct MetricsRow {
  std::string method;
  int run = 0;
  int step = 0;
  double ospa2_total = 0.0;
  double ospa2_group = 0.0;
  double ospa2_single = 0.0;
  int n_confirmed = 0;
  int bp_iters = 0;
  double t_predict_ms = 0.0;
  double t_assoc_ms = 0.0;
  double t_update_ms = 0.0;
};

struct CellResult {
  std::vector<MetricsRow> rows;
  std::vector<std::string> track_lines;  // tracks.jsonl records
};

/// A run that failed at runtime, with enough context to reproduce it.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& method, int run, std::uint64_t seed, const std::string& what)
      : std::runtime_error("method " + method + ", run " + std::to_string(run) + ", seed " +
                           std::to_string(seed) + ": " + what),
        run_(run),
        seed_(seed) {}

  [[nodiscard]] int run() const { return run_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  int run_;
  std::uint64_t seed_;
};

/// Independent seed for run `run` (0-based) derived from the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run);

/// Simulates one run and tracks it with one method. Methods of the same run
/// see identical measurements and filter seeds.
CellResult run_cell(const ExperimentConfig& config, const MethodSpec& method, int run);

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<std::string> track_lines;
};

/// All (method, run) cells on `workers` threads; output order is
/// method-major, then run, then step, independent of scheduling.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t workers);

/// Worker count from GTBP_WORKERS, else the hardware concurrency.
std::size_t default_workers();

std::string metrics_csv(const std::vector<MetricsRow>& rows, bool with_timings);

/// Writes `content` to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes metrics.csv and tracks.jsonl into `dir`.
void write_experiment(const std::filesystem::path& dir, const ExperimentResult& result, bool with_timings);

enum class Sweep { kPartitions, kClutter, kTargets };

Sweep parse_sweep(const std::string& name);
std::string sweep_name(Sweep sweep);

struct BenchConfig {
  Sweep sweep = Sweep::kPartitions;
  std::vector<double> values;
  std::size_t particles = 1000;
  int warmup_steps = 10;
  int timed_steps = 10;
  int runs = 1;
  std::uint64_t seed = 1;
};

struct BenchRow {
  double value = 0.0;
  int run = 0;
  double mean_step_ms = 0.0;
  double predict_ms = 0.0;
  double assoc_ms = 0.0;
  double update_ms = 0.0;
  double resample_ms = 0.0;
  double mean_tracks = 0.0;
  double mean_measurements = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares fit of y on x. Needs at least two distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct BenchResult {
  Sweep sweep = Sweep::kPartitions;
  std::vector<BenchRow> rows;
  LinearFit linear;  // mean step time vs value
  LinearFit loglog;  // log mean step time vs log value
};

/// Timing sweep over the number of partitions, the clutter rate or the
/// number of targets, on the line-formation scenario.
BenchResult run_bench(const BenchConfig& config);

std::string bench_csv(const BenchResult& result);
std::string bench_fit_csv(const BenchResult& result);

}  // namespace gtbp
