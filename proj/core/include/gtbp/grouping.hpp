#pragma once

#include <compare>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gtbp/types.hpp"

namespace gtbp {

/// Group labels over the legacy tracks of one time step.
///
/// Label 0 marks an unconfirmed track that takes no part in grouping; nonzero
/// labels are numbered 1..N in order of first occurrence. Instances are always
/// canonical, so two partitions compare equal iff they induce the same groups.
class GroupPartition {
 public:
  GroupPartition() = default;

  /// Throws std::invalid_argument on negative labels.
  static GroupPartition canonicalize(std::span<const int> raw);

  [[nodiscard]] const std::vector<int>& labels() const { return labels_; }
  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] int label(std::size_t i) const { return labels_[i]; }

  /// N(g), the number of groups.
  [[nodiscard]] int group_count() const { return group_count_; }

  /// Member indices of every group; entry j holds group j + 1.
  [[nodiscard]] std::vector<std::vector<std::size_t>> groups() const;

  friend bool operator==(const GroupPartition&, const GroupPartition&) = default;
  friend auto operator<=>(const GroupPartition& a, const GroupPartition& b) {
    return a.labels_ <=> b.labels_;
  }

 private:
  std::vector<int> labels_;
  int group_count_ = 0;
};

inline GroupPartition canonicalize(std::span<const int> raw) {
  return GroupPartition::canonicalize(raw);
}

/// Every confirmed track in its own group, unconfirmed tracks labelled 0.
GroupPartition all_singletons(std::span<const bool> confirmed);

/// Moment summary of one track used to score group memberships.
struct TrackSummary {
  KinematicState estimate = KinematicState::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
  double existence = 0.0;
  bool confirmed = false;
};

/// Weighted mean and regularized sample covariance of a particle cloud.
TrackSummary summarize(const ParticleCloud& cloud, bool confirmed, double regularization = 1e-6);

/// Squared Mahalanobis distance (a-b)^T (pa+pb)^{-1} (a-b).
/// Throws NumericalError if pa + pb is not positive definite.
double mahalanobis_distance(const KinematicState& a, const Eigen::Matrix4d& pa,
                            const KinematicState& b, const Eigen::Matrix4d& pb);

enum class Existence { kExists, kNonexistent };

/// Probability that `track` belongs to the group led by `leader`.
///
/// The distance uses the summed covariance track.covariance + leader_cov. A
/// nonexistent track gets the constant p0.
double membership_prob(const TrackSummary& track, const KinematicState& leader,
                       const Eigen::Matrix4d& leader_cov, double p0 = 0.001,
                       Existence branch = Existence::kExists);

/// Log of the unnormalized partition weight for one label vector.
///
/// Labels need not be canonical: any two label vectors that induce the same
/// groups score identically. `existence_sums` holds the per-track particle
/// mass; pass all ones for the existence-agnostic score.
double partition_log_score(std::span<const TrackSummary> tracks,
                           std::span<const double> existence_sums,
                           std::span<const int> labels, double p0);

struct PartitionPmf {
  std::vector<double> weights;
  bool uniform_fallback = false;
};

/// Normalized group-structure pmf over `candidates`, treating every
/// confirmed track as existing.
PartitionPmf partition_pmf(std::span<const TrackSummary> tracks,
                           std::span<const GroupPartition> candidates, double p0 = 0.001);

enum class AlphaMode { kEstimate, kParticle };

/// The preserved partitions with predicted and posterior weights.
struct PartitionHypothesisSet {
  std::vector<GroupPartition> partitions;
  std::vector<double> prior_weights;
  std::vector<double> posterior_weights;
  bool uniform_fallback = false;

  [[nodiscard]] std::size_t size() const { return partitions.size(); }
};

struct PartitionWeightOptions {
  std::size_t max_partitions = 2;
  double p0 = 0.001;
  AlphaMode mode = AlphaMode::kEstimate;
};

/// Predicted partition weights including the nonexistence term, reduced to
/// the `max_partitions` best hypotheses and renormalized. Ties are broken by
/// lexicographic label order.
///
/// `clouds` is only read in AlphaMode::kParticle and must then hold one cloud
/// per track.
PartitionHypothesisSet predict_partition_weights(std::span<const TrackSummary> tracks,
                                                 std::span<const double> existence_sums,
                                                 std::span<const GroupPartition> candidates,
                                                 const PartitionWeightOptions& options,
                                                 std::span<const ParticleCloud* const> clouds = {});

struct CandidateOptions {
  double gate = 25.0;     // squared Mahalanobis units
  std::size_t cap = 32;
};

/// Candidate partitions over the confirmed tracks: gating components, the
/// all-singletons partition, the previous hypotheses, and the one-merge and
/// one-split neighbours of the gating components. Deduplicated and truncated
/// to `cap` (the first three kinds are always kept).
std::vector<GroupPartition> generate_candidates(std::span<const TrackSummary> tracks,
                                                std::span<const GroupPartition> previous,
                                                const CandidateOptions& options);

/// A partition stored against stable track ids so it survives pruning.
struct LabeledPartition {
  std::vector<TrackId> ids;
  std::vector<int> labels;
  double weight = 0.0;
};

/// Re-express `previous` over the current tracks. Confirmed tracks unknown to
/// `previous` (or unlabelled there) become singletons; unconfirmed tracks get 0.
GroupPartition reexpress(const LabeledPartition& previous, std::span<const TrackId> ids,
                         std::span<const bool> confirmed);

}  // namespace gtbp
