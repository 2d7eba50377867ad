#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gtbp/association.hpp"
#include "gtbp/motion.hpp"
#include "gtbp/types.hpp"

namespace gtbp {

/// Motion applied to the transitions k -> k+1 for k >= start, until the next segment.
struct MotionSegment {
  int start = 1;
  MotionKind kind = MotionKind::kConstantVelocity;
  double omega = 0.0;  // rad/s
};

struct TargetSpec {
  TrackId id = 0;
  int birth = 1;   // first step present
  int death = 1;   // last step present
  KinematicState initial = KinematicState::Zero();
  std::vector<MotionSegment> segments;
  bool grouped = false;  // member of a formation, used to split the metric
};

struct ScenarioSpec {
  int duration = 100;
  double dt = 2.0;
  double region_radius = 5000.0;
  double meas_std = 10.0;
  double detection_prob = 0.995;
  double clutter_mean = 10.0;
  double birth_ratio = 1e-5;  // mu_b / mu_c
  /// Clutter rate assumed by the tracker when it differs from the simulated one
  /// (needed when clutter_mean is 0).
  std::optional<double> assumed_clutter_mean;
  std::uint64_t seed = 1;
  std::vector<TargetSpec> targets;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  [[nodiscard]] double clutter_density() const;
  [[nodiscard]] double model_clutter_mean() const;
};

struct TruthPoint {
  TrackId id = 0;
  KinematicState state = KinematicState::Zero();
  bool grouped = false;
};

/// steps[k-1] holds the targets alive at step k.
struct GroundTruth {
  std::vector<std::vector<TruthPoint>> steps;

  [[nodiscard]] int duration() const { return static_cast<int>(steps.size()); }
};

/// Noiseless trajectories for every target over its lifespan.
GroundTruth generate_truth(const ScenarioSpec& spec);

/// Three targets that converge into a triangular formation, fly together and
/// split again, plus an independent fourth target.
ScenarioSpec build_scenario1();

/// `count` targets in a line formation spaced `spacing` metres along y,
/// performing the same CV/CT manoeuvres.
ScenarioSpec build_scenario2(int count = 5, double spacing = 50.0);

/// Detections, clutter and model parameters for every step.
std::vector<ScanFrame> synthesize(const GroundTruth& truth, const ScenarioSpec& spec, Rng& rng);

/// Uniform draw inside the disk of the given radius centred at the origin.
Measurement uniform_in_disk(double radius, Rng& rng);

struct BirthConfig {
  double region_radius = 5000.0;
  double max_speed = 30.0;  // m/s per axis
  double inflation = 4.0;   // position covariance = inflation * sigma_w^2 I
};

/// Birth particles seeded by the previous-step measurement nearest to the
/// current one.
class BirthSampler {
 public:
  BirthSampler(std::span<const Measurement> previous, double meas_std, BirthConfig config = {});

  [[nodiscard]] Eigen::Matrix4Xd sample(const Measurement& z, std::size_t count, Rng& rng) const;

  /// Index of the seeding measurement, or nothing for an empty previous frame.
  [[nodiscard]] std::optional<std::size_t> seed_for(const Measurement& z) const;

 private:
  std::vector<Measurement> previous_;
  double meas_std_;
  BirthConfig config_;
};

}  // namespace gtbp
