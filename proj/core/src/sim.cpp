#include "gtbp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gtbp {
namespace {

constexpr double kTurnRate = 2.25 * std::numbers::pi / 180.0;

const MotionSegment& segment_at(const TargetSpec& t, int k) {
  const MotionSegment* current = &t.segments.front();
  for (const auto& s : t.segments) {
    if (s.start <= k) current = &s;
  }
  return *current;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (duration < 1) throw ConfigError("scenario.duration", "must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("scenario.dt", "must be positive");
  if (!(region_radius > 0.0)) throw ConfigError("scenario.region_radius", "must be positive");
  if (!(meas_std > 0.0)) throw ConfigError("scenario.meas_std", "must be positive");
  if (!(detection_prob > 0.0 && detection_prob <= 1.0)) {
    throw ConfigError("scenario.detection_prob", "must lie in (0, 1]");
  }
  if (!(clutter_mean >= 0.0)) throw ConfigError("scenario.clutter_mean", "must be nonnegative");
  if (!(birth_ratio > 0.0)) throw ConfigError("scenario.birth_ratio", "must be positive");
  if (!(model_clutter_mean() > 0.0)) {
    throw ConfigError("scenario.assumed_clutter_mean", "required and positive when clutter_mean is 0");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const std::string field = "scenario.targets[" + std::to_string(i) + "]";
    if (t.birth < 1 || t.birth > t.death || t.death > duration) {
      throw ConfigError(field, "lifespan must satisfy 1 <= birth <= death <= duration");
    }
    if (!t.initial.allFinite()) throw ConfigError(field, "initial state must be finite");
    if (t.segments.empty()) throw ConfigError(field, "needs at least one motion segment");
    for (const auto& s : t.segments) {
      if (s.kind == MotionKind::kConstantTurn && s.omega == 0.0) {
        throw ConfigError(field, "constant-turn segment needs a nonzero turn rate");
      }
    }
  }
}

double ScenarioSpec::clutter_density() const {
  return 1.0 / (std::numbers::pi * region_radius * region_radius);
}

double ScenarioSpec::model_clutter_mean() const {
  return assumed_clutter_mean.value_or(clutter_mean);
}

GroundTruth generate_truth(const ScenarioSpec& spec) {
  spec.validate();
  GroundTruth truth;
  truth.steps.resize(static_cast<std::size_t>(spec.duration));
  for (const auto& t : spec.targets) {
    KinematicState x = t.initial;
    for (int k = t.birth; k <= t.death; ++k) {
      truth.steps[static_cast<std::size_t>(k - 1)].push_back({t.id, x, t.grouped});
      const auto& seg = segment_at(t, k);
      x = seg.kind == MotionKind::kConstantTurn ? ct_step(x, seg.omega, spec.dt) : cv_step(x, spec.dt);
    }
  }
  return truth;
}

ScenarioSpec build_scenario1() {
  ScenarioSpec spec;
  const double w = kTurnRate;
  const auto cv = MotionKind::kConstantVelocity;
  const auto ct = MotionKind::kConstantTurn;
  // Targets 1 and 3 turn 45 degrees towards target 2 over steps 7-16 and
  // reach a triangle about 30 m across, then turn away over steps 51-60.
  spec.targets.push_back({1, 1, 80, KinematicState(800, 10, 3255, -10),
                          {{1, cv, 0}, {7, ct, w}, {17, cv, 0}, {51, ct, w}, {61, cv, 0}}, true});
  spec.targets.push_back({2, 1, 80, KinematicState(740, 10 * std::numbers::sqrt2, 3000, 0),
                          {{1, cv, 0}}, true});
  spec.targets.push_back({3, 1, 80, KinematicState(800, 10, 2745, 10),
                          {{1, cv, 0}, {7, ct, -w}, {17, cv, 0}, {51, ct, -w}, {61, cv, 0}}, true});
  spec.targets.push_back({4, 21, 100, KinematicState(1010, 8, 2500, -8), {{1, cv, 0}}, false});
  return spec;
}

ScenarioSpec build_scenario2(int count, double spacing) {
  if (count < 1) throw ConfigError("scenario.targets", "need at least one target");
  ScenarioSpec spec;
  const double w = kTurnRate;
  const auto cv = MotionKind::kConstantVelocity;
  const auto ct = MotionKind::kConstantTurn;
  const std::vector<MotionSegment> segments = {
      {1, cv, 0}, {31, ct, -w}, {51, cv, 0}, {71, ct, w}, {91, cv, 0}};
  for (int i = 0; i < count; ++i) {
    spec.targets.push_back({static_cast<TrackId>(i + 1), 1, spec.duration,
                            KinematicState(800, 10, 3000 - spacing * i, 0), segments, count > 1});
  }
  return spec;
}

Measurement uniform_in_disk(double radius, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  return {r * std::cos(theta), r * std::sin(theta)};
}

std::vector<ScanFrame> synthesize(const GroundTruth& truth, const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  std::bernoulli_distribution detect(spec.detection_prob);
  std::normal_distribution<double> noise(0.0, spec.meas_std);
  std::poisson_distribution<int> clutter(spec.clutter_mean > 0.0 ? spec.clutter_mean : 1.0);

  std::vector<ScanFrame> frames;
  frames.reserve(truth.steps.size());
  for (std::size_t s = 0; s < truth.steps.size(); ++s) {
    ScanFrame f;
    f.k = static_cast<int>(s) + 1;
    f.clutter_mean = spec.model_clutter_mean();
    f.clutter_density = spec.clutter_density();
    f.detection_prob = spec.detection_prob;
    f.birth_mean = spec.birth_ratio * spec.model_clutter_mean();
    f.meas_std = spec.meas_std;
    for (const auto& p : truth.steps[s]) {
      if (!detect(rng)) continue;
      const double ex = noise(rng);
      const double ey = noise(rng);
      f.measurements.emplace_back(p.state(0) + ex, p.state(2) + ey);
    }
    const int count = spec.clutter_mean > 0.0 ? clutter(rng) : 0;
    for (int c = 0; c < count; ++c) f.measurements.push_back(uniform_in_disk(spec.region_radius, rng));
    std::shuffle(f.measurements.begin(), f.measurements.end(), rng);
    frames.push_back(std::move(f));
  }
  return frames;
}

BirthSampler::BirthSampler(std::span<const Measurement> previous, double meas_std, BirthConfig config)
    : previous_(previous.begin(), previous.end()), meas_std_(meas_std), config_(config) {
  if (!(meas_std > 0.0)) throw std::invalid_argument("birth sampler needs a positive sigma_w");
  if (!(config.region_radius > 0.0)) throw ConfigError("birth.region_radius", "must be positive");
  if (!(config.max_speed >= 0.0)) throw ConfigError("birth.max_speed", "must be nonnegative");
  if (!(config.inflation > 0.0)) throw ConfigError("birth.inflation", "must be positive");
}

std::optional<std::size_t> BirthSampler::seed_for(const Measurement& z) const {
  if (previous_.empty()) return std::nullopt;
  std::size_t best = 0;
  double best_d = (previous_[0] - z).squaredNorm();
  for (std::size_t j = 1; j < previous_.size(); ++j) {
    const double d = (previous_[j] - z).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Eigen::Matrix4Xd BirthSampler::sample(const Measurement& z, std::size_t count, Rng& rng) const {
  Eigen::Matrix4Xd out(4, static_cast<Eigen::Index>(count));
  const auto seed = seed_for(z);
  const double radius = config_.region_radius;
  const double spread = std::sqrt(config_.inflation) * meas_std_;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> speed(-config_.max_speed, config_.max_speed);

  for (Eigen::Index l = 0; l < out.cols(); ++l) {
    Measurement p;
    if (!seed) {
      p = uniform_in_disk(radius, rng);
    } else {
      const Measurement& c = previous_[*seed];
      int attempts = 0;
      do {
        p = Measurement(c(0) + spread * normal(rng), c(1) + spread * normal(rng));
      } while (p.norm() > radius && ++attempts < 16);
      if (p.norm() > radius) p *= radius / p.norm();
    }
    const double vx = speed(rng);
    const double vy = speed(rng);
    out.col(l) << p(0), vx, p(1), vy;
  }
  return out;
}

}  // namespace gtbp
