#include "gtbp/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace gtbp {
namespace {

// A mapping node that remembers which keys were consumed so that typos are
// reported instead of silently ignored.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_, "expected a mapping");
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <class T>
  bool read(const std::string& key, T& out) {
    used_.insert(key);
    if (!has(key)) return false;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
    return true;
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return has(key) ? node_[key] : YAML::Node();
  }

  Section child(const std::string& key) { return Section(raw(key), field(key)); }

  [[nodiscard]] std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.contains(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

double degrees(double v) { return v * std::numbers::pi / 180.0; }

TargetSpec parse_target(const YAML::Node& node, const std::string& path) {
  Section s(node, path);
  TargetSpec t;
  int id = 0;
  if (!s.read("id", id) || id < 1) throw ConfigError(s.field("id"), "required positive integer");
  t.id = static_cast<TrackId>(id);
  if (!s.read("birth", t.birth)) throw ConfigError(s.field("birth"), "required");
  if (!s.read("death", t.death)) throw ConfigError(s.field("death"), "required");
  std::vector<double> state;
  if (!s.read("state", state) || state.size() != 4) {
    throw ConfigError(s.field("state"), "required list [px, vx, py, vy]");
  }
  t.initial = KinematicState(state[0], state[1], state[2], state[3]);
  s.read("grouped", t.grouped);
  const YAML::Node segments = s.raw("segments");
  if (!segments || segments.IsNull()) {
    t.segments = {{1, MotionKind::kConstantVelocity, 0.0}};
  } else {
    if (!segments.IsSequence()) throw ConfigError(s.field("segments"), "expected a list");
    for (std::size_t k = 0; k < segments.size(); ++k) {
      Section seg(segments[k], s.field("segments") + "[" + std::to_string(k) + "]");
      MotionSegment m;
      seg.read("start", m.start);
      std::string kind = "cv";
      seg.read("kind", kind);
      double omega_deg = 0.0;
      seg.read("omega_deg", omega_deg);
      if (kind == "cv") {
        m.kind = MotionKind::kConstantVelocity;
      } else if (kind == "ct") {
        m.kind = MotionKind::kConstantTurn;
        m.omega = degrees(omega_deg);
      } else {
        throw ConfigError(seg.field("kind"), "must be cv or ct");
      }
      seg.finish();
      t.segments.push_back(m);
    }
  }
  s.finish();
  return t;
}

ScenarioSpec parse_scenario(Section s, std::string& preset) {
  ScenarioSpec spec;
  s.read("preset", preset);
  int group_size = 5;
  double spacing = 50.0;
  s.read("group_size", group_size);
  s.read("spacing", spacing);
  if (preset == "scenario1") {
    spec = build_scenario1();
  } else if (preset == "scenario2") {
    spec = build_scenario2(group_size, spacing);
  } else if (!preset.empty()) {
    throw ConfigError(s.field("preset"), "unknown preset '" + preset + "'");
  }

  s.read("duration", spec.duration);
  s.read("dt", spec.dt);
  s.read("region_radius", spec.region_radius);
  s.read("meas_std", spec.meas_std);
  s.read("detection_prob", spec.detection_prob);
  s.read("clutter_mean", spec.clutter_mean);
  s.read("birth_ratio", spec.birth_ratio);
  double assumed = 0.0;
  if (s.read("assumed_clutter_mean", assumed)) spec.assumed_clutter_mean = assumed;

  const YAML::Node targets = s.raw("targets");
  if (targets && !targets.IsNull()) {
    if (!preset.empty()) throw ConfigError(s.field("targets"), "cannot be combined with a preset");
    if (!targets.IsSequence()) throw ConfigError(s.field("targets"), "expected a list");
    spec.targets.clear();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      spec.targets.push_back(parse_target(targets[i], s.field("targets") + "[" + std::to_string(i) + "]"));
    }
  } else if (preset.empty()) {
    throw ConfigError(s.field("targets"), "required when no preset is given");
  }
  s.finish();
  return spec;
}

FilterConfig parse_filter(Section s, const ScenarioSpec& scenario) {
  FilterConfig f;
  f.dt = scenario.dt;
  f.birth.region_radius = scenario.region_radius;
  f.prune_threshold = 1e-5 * scenario.model_clutter_mean();

  s.read("particles", f.particles);
  s.read("max_tracks", f.max_tracks);
  s.read("declare_threshold", f.declare_threshold);
  s.read("prune_threshold", f.prune_threshold);
  s.read("p0", f.p0);
  s.read("gate", f.gate);
  s.read("candidate_cap", f.candidate_cap);
  s.read("survival_prob", f.survival_prob);
  s.read("bp_max_iterations", f.bp_max_iterations);
  s.read("bp_tolerance", f.bp_tolerance);
  s.read("bp_fixed_iterations", f.bp_fixed_iterations);
  s.read("censor_threshold", f.censor_threshold);
  s.read("process_std", f.process_std);
  std::string alpha = "estimate";
  s.read("alpha_mode", alpha);
  if (alpha == "estimate") {
    f.alpha_mode = AlphaMode::kEstimate;
  } else if (alpha == "particle") {
    f.alpha_mode = AlphaMode::kParticle;
  } else {
    throw ConfigError(s.field("alpha_mode"), "must be estimate or particle");
  }
  Section birth = s.child("birth");
  birth.read("max_speed", f.birth.max_speed);
  birth.read("inflation", f.birth.inflation);
  birth.finish();
  s.finish();
  return f;
}

ExperimentConfig parse_root(const YAML::Node& root) {
  Section s(root, "");
  ExperimentConfig config;
  config.scenario = parse_scenario(s.child("scenario"), config.preset);
  config.filter = parse_filter(s.child("filter"), config.scenario);

  std::vector<std::string> methods;
  s.read("methods", methods);
  for (const auto& m : methods) config.methods.push_back(parse_method(m));
  s.read("runs", config.runs);
  s.read("seed", config.seed);
  s.read("steps", config.steps);
  s.read("record_timings", config.record_timings);

  Section metrics = s.child("metrics");
  metrics.read("cutoff", config.ospa.cutoff);
  metrics.read("order", config.ospa.order);
  metrics.read("base_order", config.ospa.base_order);
  metrics.read("window", config.ospa.window);
  metrics.read("weights", config.ospa.weights);
  metrics.finish();
  s.finish();

  config.scenario.seed = config.seed;
  config.validate();
  return config;
}

}  // namespace

MethodSpec parse_method(const std::string& name) {
  MethodSpec m;
  m.name = name;
  if (name == "bp") {
    m.grouping = GroupingMode::kDisabled;
    m.max_partitions = 1;
    return m;
  }
  if (name == "gtbp-singletons") {
    m.grouping = GroupingMode::kSingletonsOnly;
    m.max_partitions = 1;
    return m;
  }
  const std::string prefix = "gtbp-";
  const std::string suffix = "best";
  if (name.size() > prefix.size() + suffix.size() && name.starts_with(prefix) && name.ends_with(suffix)) {
    const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      const int count = std::stoi(digits);
      if (count >= 1) {
        m.grouping = GroupingMode::kFull;
        m.max_partitions = static_cast<std::size_t>(count);
        return m;
      }
    }
  }
  throw ConfigError("methods", "unknown method '" + name + "' (use bp, gtbp-<M>best or gtbp-singletons)");
}

void ExperimentConfig::validate() const {
  scenario.validate();
  filter.validate();
  if (runs < 1) throw ConfigError("runs", "must be at least 1");
  if (methods.empty()) throw ConfigError("methods", "must list at least one method");
  if (steps < 0 || steps > scenario.duration) throw ConfigError("steps", "must lie in [0, duration]");
  try {
    ospa.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("metrics", e.what());
  }
}

int ExperimentConfig::effective_steps() const { return steps == 0 ? scenario.duration : steps; }

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("cannot parse: ") + e.what());
  }
  if (!root || !root.IsMap()) throw ConfigError("config", "expected a mapping at the top level");
  return parse_root(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string preset_text(const std::string& name) {
  if (name == "scenario1") {
    return R"(# Three targets converge into a formation, fly together and split; a fourth
# target crosses the scene on its own.
scenario:
  preset: scenario1
  clutter_mean: 10
  detection_prob: 0.995
  meas_std: 10
  birth_ratio: 1.0e-5
filter:
  particles: 3000
  max_tracks: 8
  declare_threshold: 0.8
  p0: 0.001
  survival_prob: 0.9999
  process_std: 10
  bp_max_iterations: 100
  bp_tolerance: 1.0e-5
  censor_threshold: 0.9
methods: [bp, gtbp-2best, gtbp-4best]
runs: 100
seed: 1
metrics:
  cutoff: 50
  order: 1
  base_order: 2
  window: 10
)";
  }
  if (name == "scenario2") {
    return R"(# Five targets in a line formation 50 m apart manoeuvring together.
scenario:
  preset: scenario2
  group_size: 5
  spacing: 50
  clutter_mean: 10
  detection_prob: 0.995
  meas_std: 10
  birth_ratio: 1.0e-5
filter:
  particles: 1000
  max_tracks: 8
  declare_threshold: 0.8
  p0: 0.001
  survival_prob: 0.9999
  process_std: 10
  bp_max_iterations: 20
  bp_fixed_iterations: true
  censor_threshold: 0.9
methods: [bp, gtbp-2best, gtbp-4best]
runs: 100
seed: 1
metrics:
  cutoff: 50
  order: 1
  base_order: 2
  window: 20
)";
  }
  throw ConfigError("name", "unknown preset '" + name + "' (use scenario1 or scenario2)");
}

FilterConfig filter_for(const ExperimentConfig& config, const MethodSpec& method) {
  FilterConfig f = config.filter;
  f.grouping = method.grouping;
  f.max_partitions = method.max_partitions;
  return f;
}

}  // namespace gtbp
