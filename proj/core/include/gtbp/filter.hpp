#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gtbp/association.hpp"
#include "gtbp/grouping.hpp"
#include "gtbp/sim.hpp"
#include "gtbp/types.hpp"

namespace gtbp {

enum class GroupingMode {
  kDisabled,        // plain BP tracker, every track predicted independently
  kSingletonsOnly,  // partition machinery with the all-singletons candidate only
  kFull,
};

struct FilterConfig {
  std::size_t particles = 1000;      // L
  std::size_t max_partitions = 2;    // M
  std::size_t max_tracks = 8;        // N_max
  double declare_threshold = 0.8;    // P_e
  double prune_threshold = 1e-4;     // P_pr
  double p0 = 0.001;
  double gate = 25.0;
  std::size_t candidate_cap = 32;
  double survival_prob = 0.9999;     // p_s
  int bp_max_iterations = 100;
  double bp_tolerance = 1e-5;
  bool bp_fixed_iterations = false;
  double censor_threshold = 0.9;
  double process_std = 10.0;         // sigma_v
  double dt = 2.0;
  GroupingMode grouping = GroupingMode::kFull;
  AlphaMode alpha_mode = AlphaMode::kEstimate;
  BirthConfig birth;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct Track {
  TrackId id = 0;
  ParticleCloud cloud;
  double existence = 0.0;
  bool confirmed = false;
  int birth_step = 0;
};

struct FilterState {
  std::vector<Track> tracks;
  std::vector<LabeledPartition> partitions;
  int step = 0;
  TrackId next_id = 1;
  std::vector<Measurement> previous_measurements;
};

struct TrackEstimate {
  TrackId id = 0;
  double existence = 0.0;
  KinematicState state = KinematicState::Zero();
  bool confirmed = false;
  bool is_new = false;
};

struct PartitionReport {
  std::vector<TrackId> ids;
  std::vector<int> labels;
  double prior = 0.0;
  double posterior = 0.0;
};

struct PhaseTimings {
  double predict_ms = 0.0;
  double associate_ms = 0.0;
  double update_ms = 0.0;
  double resample_ms = 0.0;
};

struct StepReport {
  int step = 0;
  std::vector<TrackEstimate> estimates;  // surviving tracks, existence >= 1e-12
  std::vector<PartitionReport> partitions;
  int bp_iterations = 0;
  bool bp_converged = true;
  std::size_t legacy_count = 0;
  std::size_t measurement_count = 0;
  std::size_t spawned = 0;  // measurements that passed censoring
  std::size_t tracks_before_prune = 0;
  std::size_t tracks_after_prune = 0;
  bool partition_fallback = false;
  bool zero_mass = false;
  PhaseTimings timings;
};

/// Predicted clouds per preserved partition; clouds[g][i] is track i under
/// partition g, weights already scaled by p_s.
struct Prediction {
  PartitionHypothesisSet hypotheses;
  std::vector<std::vector<ParticleCloud>> clouds;
  std::vector<std::vector<Eigen::MatrixXd>> likelihood;  // filled by legacy_beta
};

/// Partition weighting and per-partition particle prediction.
Prediction predict(const FilterState& state, const FilterConfig& config, Rng& rng);

/// beta rows of the legacy tracks; caches the particle likelihoods in `prediction`.
Eigen::MatrixXd legacy_beta(Prediction& prediction, const ScanFrame& frame);

/// L birth particles per measurement, seeded by the previous scan.
std::vector<Eigen::Matrix4Xd> sample_births(const FilterState& state, const ScanFrame& frame,
                                            const FilterConfig& config, Rng& rng);

struct LegacyUpdate {
  std::vector<std::vector<ParticleCloud>> clouds;  // normalized weights per partition
  Eigen::MatrixXd evidence;                        // partitions x tracks, sum w^A + w^B
  std::vector<double> existence;
  std::vector<KinematicState> estimates;
  std::vector<bool> zero_mass;
};

LegacyUpdate update_legacy(const Prediction& prediction, const AssociationMarginals& marginals,
                           const ScanFrame& frame);

/// Posterior partition weights proportional to alpha(g) * prod_i evidence(g, i).
PartitionPmf partition_posterior(std::span<const double> alpha, const Eigen::MatrixXd& evidence);

struct NewTrack {
  ParticleCloud cloud;
  double existence = 0.0;
  KinematicState estimate = KinematicState::Zero();
  bool spawned = false;  // false for censored measurements
};

/// One new track per measurement; censored measurements get an empty mass.
std::vector<NewTrack> update_new(const ScanFrame& frame, const std::vector<Eigen::Matrix4Xd>& births,
                                 const AssociationMarginals& marginals, std::span<const std::size_t> kept);

/// Existence, weighted-mean estimate and declaration flag of every track.
std::vector<TrackEstimate> extract(const FilterState& state, const FilterConfig& config);

/// Systematic resampling of `count` indices from nonnegative weights.
std::vector<std::size_t> systematic_resample(const Eigen::VectorXd& weights, std::size_t count, Rng& rng);

/// Drop tracks below P_pr, then the lowest-existence tracks beyond N_max.
/// Returns the indices kept, in their original order.
std::vector<std::size_t> select_survivors(std::span<const double> existence, const FilterConfig& config);

/// One recursion of the tracker.
StepReport step(FilterState& state, const ScanFrame& frame, const FilterConfig& config, Rng& rng);

/// A filter instance owning its configuration, state and random stream.
class Tracker {
 public:
  Tracker(FilterConfig config, std::uint64_t seed);

  StepReport step(const ScanFrame& frame);

  [[nodiscard]] const FilterState& state() const { return state_; }
  [[nodiscard]] FilterState& state() { return state_; }
  [[nodiscard]] const FilterConfig& config() const { return config_; }

 private:
  FilterConfig config_;
  FilterState state_;
  Rng rng_;
};

}  // namespace gtbp
