#include "gtbp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace gtbp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kFilterStream = 0x5f1e7e5eedULL;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string track_line(const std::string& method, int run, const StepReport& report) {
  nlohmann::json j;
  j["method"] = method;
  j["run"] = run;
  j["step"] = report.step;
  auto& estimates = j["estimates"] = nlohmann::json::array();
  for (const auto& e : report.estimates) {
    estimates.push_back({{"id", e.id},
                         {"existence", e.existence},
                         {"state", {e.state(0), e.state(1), e.state(2), e.state(3)}},
                         {"confirmed", e.confirmed},
                         {"new", e.is_new}});
  }
  auto& partitions = j["partitions"] = nlohmann::json::array();
  for (const auto& p : report.partitions) {
    std::map<int, std::vector<TrackId>> groups;
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
      if (p.labels[i] > 0) groups[p.labels[i]].push_back(p.ids[i]);
    }
    nlohmann::json g = nlohmann::json::array();
    for (const auto& [label, members] : groups) g.push_back(members);
    partitions.push_back({{"prior", p.prior}, {"posterior", p.posterior}, {"groups", g}});
  }
  return j.dump();
}

struct CellSetup {
  GroundTruth truth;
  std::vector<ScanFrame> frames;
};

CellSetup simulate(const ScenarioSpec& spec, std::uint64_t seed) {
  CellSetup s;
  s.truth = generate_truth(spec);
  Rng rng(seed);
  s.frames = synthesize(s.truth, spec, rng);
  return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run) {
  return splitmix64(splitmix64(base) ^ (run * 0xD1B54A32D192ED03ULL + 1));
}

CellResult run_cell(const ExperimentConfig& config, const MethodSpec& method, int run) {
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(run));
  try {
    const CellSetup setup = simulate(config.scenario, seed);
    Tracker tracker(filter_for(config, method), derive_seed(seed, kFilterStream));
    const TrackSet truth = TrackSet::from_truth(setup.truth);
    TrackSet estimate;

    CellResult out;
    const int steps = config.effective_steps();
    for (int k = 1; k <= steps; ++k) {
      const StepReport report = tracker.step(setup.frames[static_cast<std::size_t>(k - 1)]);
      int confirmed = 0;
      for (const auto& e : report.estimates) {
        if (!e.confirmed) continue;
        ++confirmed;
        estimate.add(e.id, k, Point(e.state(0), e.state(2)));
      }
      const OspaBreakdown d = ospa2_breakdown(truth, estimate, config.ospa, k);
      MetricsRow row;
      row.method = method.name;
      row.run = run;
      row.step = k;
      row.ospa2_total = d.total;
      row.ospa2_group = d.group;
      row.ospa2_single = d.single;
      row.n_confirmed = confirmed;
      row.bp_iters = report.bp_iterations;
      if (config.record_timings) {
        row.t_predict_ms = report.timings.predict_ms;
        row.t_assoc_ms = report.timings.associate_ms;
        row.t_update_ms = report.timings.update_ms + report.timings.resample_ms;
      }
      out.rows.push_back(row);
      out.track_lines.push_back(track_line(method.name, run, report));
    }
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError(method.name, run, seed, e.what());
  }
}

std::size_t default_workers() {
  if (const char* env = std::getenv("GTBP_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw ConfigError("GTBP_WORKERS", "must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t workers) {
  config.validate();
  const std::size_t runs = static_cast<std::size_t>(config.runs);
  const std::size_t cells = config.methods.size() * runs;
  std::vector<CellResult> results(cells);
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      try {
        results[c] = run_cell(config, config.methods[c / runs], static_cast<int>(c % runs));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::clamp<std::size_t>(workers, 1, cells);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ExperimentResult out;
  for (auto& r : results) {
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
    out.track_lines.insert(out.track_lines.end(), r.track_lines.begin(), r.track_lines.end());
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows, bool with_timings) {
  std::string out =
      "method,run,step,ospa2_total,ospa2_group,ospa2_single,n_confirmed,bp_iters,t_predict_ms,t_assoc_ms,"
      "t_update_ms\n";
  for (const auto& r : rows) {
    out += r.method + ',' + std::to_string(r.run) + ',' + std::to_string(r.step) + ',' + fmt(r.ospa2_total) +
           ',' + fmt(r.ospa2_group) + ',' + fmt(r.ospa2_single) + ',' + std::to_string(r.n_confirmed) + ',' +
           std::to_string(r.bp_iters) + ',';
    if (with_timings) {
      out += fmt(r.t_predict_ms) + ',' + fmt(r.t_assoc_ms) + ',' + fmt(r.t_update_ms) + '\n';
    } else {
      out += "0,0,0\n";
    }
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_experiment(const std::filesystem::path& dir, const ExperimentResult& result, bool with_timings) {
  std::filesystem::create_directories(dir);
  std::string tracks;
  for (const auto& line : result.track_lines) {
    tracks += line;
    tracks += '\n';
  }
  write_atomic(dir / "tracks.jsonl", tracks);
  write_atomic(dir / "metrics.csv", metrics_csv(result.rows, with_timings));
}

Sweep parse_sweep(const std::string& name) {
  if (name == "m") return Sweep::kPartitions;
  if (name == "clutter") return Sweep::kClutter;
  if (name == "targets") return Sweep::kTargets;
  throw ConfigError("sweep", "must be m, clutter or targets");
}

std::string sweep_name(Sweep sweep) {
  switch (sweep) {
    case Sweep::kPartitions:
      return "m";
    case Sweep::kClutter:
      return "clutter";
    case Sweep::kTargets:
      return "targets";
  }
  return "";
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit needs at least two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

BenchResult run_bench(const BenchConfig& config) {
  if (config.values.size() < 2) throw ConfigError("values", "need at least two sweep values");
  if (config.runs < 1) throw ConfigError("runs", "must be at least 1");
  if (config.timed_steps < 1) throw ConfigError("steps", "must be at least 1");

  BenchResult result;
  result.sweep = config.sweep;
  std::vector<double> xs, ys;
  for (double value : config.values) {
    if (!(value > 0.0)) throw ConfigError("values", "sweep values must be positive");
    int targets = 5;
    double clutter = 10.0;
    std::size_t partitions = 2;
    switch (config.sweep) {
      case Sweep::kPartitions:
        partitions = static_cast<std::size_t>(std::lround(value));
        break;
      case Sweep::kClutter:
        clutter = value;
        break;
      case Sweep::kTargets:
        targets = static_cast<int>(std::lround(value));
        break;
    }
    ScenarioSpec spec = build_scenario2(targets, 50.0);
    spec.clutter_mean = clutter;
    const int total_steps = config.warmup_steps + config.timed_steps;
    if (total_steps > spec.duration) throw ConfigError("steps", "warmup plus timed steps exceed the scenario");

    FilterConfig filter;
    filter.particles = config.particles;
    filter.max_partitions = partitions;
    filter.max_tracks = std::max<std::size_t>(20, static_cast<std::size_t>(targets) + 10);
    filter.prune_threshold = 1e-5 * clutter;
    filter.bp_max_iterations = 20;
    filter.bp_fixed_iterations = true;
    filter.dt = spec.dt;

    double sum_over_runs = 0.0;
    for (int run = 0; run < config.runs; ++run) {
      const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(run));
      const CellSetup setup = simulate(spec, seed);
      Tracker tracker(filter, derive_seed(seed, kFilterStream));
      BenchRow row;
      row.value = value;
      row.run = run;
      double wall = 0.0;
      for (int k = 1; k <= total_steps; ++k) {
        const auto& frame = setup.frames[static_cast<std::size_t>(k - 1)];
        const auto start = std::chrono::steady_clock::now();
        const StepReport report = tracker.step(frame);
        const auto stop = std::chrono::steady_clock::now();
        if (k <= config.warmup_steps) continue;
        wall += std::chrono::duration<double, std::milli>(stop - start).count();
        row.predict_ms += report.timings.predict_ms;
        row.assoc_ms += report.timings.associate_ms;
        row.update_ms += report.timings.update_ms;
        row.resample_ms += report.timings.resample_ms;
        row.mean_tracks += static_cast<double>(report.legacy_count);
        row.mean_measurements += static_cast<double>(report.measurement_count);
      }
      const double steps = config.timed_steps;
      row.mean_step_ms = wall / steps;
      row.predict_ms /= steps;
      row.assoc_ms /= steps;
      row.update_ms /= steps;
      row.resample_ms /= steps;
      row.mean_tracks /= steps;
      row.mean_measurements /= steps;
      sum_over_runs += row.mean_step_ms;
      result.rows.push_back(row);
    }
    xs.push_back(value);
    ys.push_back(sum_over_runs / config.runs);
  }

  result.linear = fit_line(xs, ys);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  result.loglog = fit_line(lx, ly);
  return result;
}

std::string bench_csv(const BenchResult& result) {
  std::string out =
      "sweep,value,run,mean_step_ms,predict_ms,assoc_ms,update_ms,resample_ms,mean_tracks,mean_measurements\n";
  for (const auto& r : result.rows) {
    out += sweep_name(result.sweep) + ',' + fmt(r.value) + ',' + std::to_string(r.run) + ',' + fmt(r.mean_step_ms) +
           ',' + fmt(r.predict_ms) + ',' + fmt(r.assoc_ms) + ',' + fmt(r.update_ms) + ',' + fmt(r.resample_ms) +
           ',' + fmt(r.mean_tracks) + ',' + fmt(r.mean_measurements) + '\n';
  }
  return out;
}

std::string bench_fit_csv(const BenchResult& result) {
  std::string out = "sweep,fit,slope,intercept,r2\n";
  out += sweep_name(result.sweep) + ",linear," + fmt(result.linear.slope) + ',' + fmt(result.linear.intercept) +
         ',' + fmt(result.linear.r2) + '\n';
  out += sweep_name(result.sweep) + ",loglog," + fmt(result.loglog.slope) + ',' + fmt(result.loglog.intercept) +
         ',' + fmt(result.loglog.r2) + '\n';
  return out;
}

}  // namespace gtbp
