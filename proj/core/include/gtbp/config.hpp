#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gtbp/filter.hpp"
#include "gtbp/metrics.hpp"
#include "gtbp/sim.hpp"

namespace gtbp {

/// A tracker variant taking part in an experiment.
struct MethodSpec {
  std::string name;
  GroupingMode grouping = GroupingMode::kFull;
  std::size_t max_partitions = 1;
};

/// Accepts "bp", "gtbp-<M>best" and "gtbp-singletons".
MethodSpec parse_method(const std::string& name);

struct ExperimentConfig {
  std::string preset;  // empty for an inline scenario
  ScenarioSpec scenario;
  FilterConfig filter;
  std::vector<MethodSpec> methods;
  int runs = 1;
  std::uint64_t seed = 1;
  int steps = 0;  // 0 runs the whole scenario
  OspaParams ospa;
  bool record_timings = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  [[nodiscard]] int effective_steps() const;
};

/// Parses a YAML document (JSON is accepted as well). Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The built-in experiment for "scenario1" or "scenario2" as editable YAML.
std::string preset_text(const std::string& name);

/// Filter for a given method: the shared filter settings with the method's
/// grouping mode and partition budget.
FilterConfig filter_for(const ExperimentConfig& config, const MethodSpec& method);

}  // namespace gtbp
