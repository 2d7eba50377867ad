#include "gtbp/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gtbp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

// log(1 - exp(-d/2)) for a squared distance d >= 0.
double log_one_minus_membership(double d) {
  if (d <= 0.0) return kNegInf;
  return std::log1p(-std::exp(-0.5 * d));
}

Eigen::Matrix4d inverse_of_sum(const Eigen::Matrix4d& pa, const Eigen::Matrix4d& pb) {
  const Eigen::Matrix4d sum = pa + pb;
  Eigen::LDLT<Eigen::Matrix4d> ldlt(sum);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericalError("covariance sum is not positive definite", 0, 0);
  }
  return ldlt.solve(Eigen::Matrix4d::Identity());
}

// Groups of a raw label vector, in first-occurrence order; label 0 skipped.
std::vector<std::vector<std::size_t>> groups_of(std::span<const int> labels) {
  std::vector<std::vector<std::size_t>> groups;
  std::unordered_map<int, std::size_t> slot;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw std::invalid_argument("group labels must be nonnegative");
    if (labels[i] == 0) continue;
    auto [it, inserted] = slot.emplace(labels[i], groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

// Leader statistics and track-to-leader distances shared across candidates.
class GroupCache {
 public:
  explicit GroupCache(std::span<const TrackSummary> tracks) : tracks_(tracks) {}

  std::size_t intern(std::vector<std::size_t> members) {
    std::sort(members.begin(), members.end());
    auto it = index_.find(members);
    if (it != index_.end()) return it->second;
    Entry e;
    e.leader.setZero();
    e.mean_cov.setZero();
    for (auto m : members) {
      e.leader += tracks_[m].estimate;
      e.mean_cov += tracks_[m].covariance;
    }
    e.leader /= static_cast<double>(members.size());
    e.mean_cov /= static_cast<double>(members.size());
    e.members = members;
    e.distance.assign(tracks_.size(), std::numeric_limits<double>::quiet_NaN());
    e.inverse.resize(tracks_.size());
    e.has_inverse.assign(tracks_.size(), false);
    entries_.push_back(std::move(e));
    index_.emplace(std::move(members), entries_.size() - 1);
    return entries_.size() - 1;
  }

  double distance(std::size_t group, std::size_t track) {
    auto& e = entries_[group];
    if (std::isnan(e.distance[track])) {
      const KinematicState diff = tracks_[track].estimate - e.leader;
      e.distance[track] = diff.dot(inverse(group, track) * diff);
    }
    return e.distance[track];
  }

  const Eigen::Matrix4d& inverse(std::size_t group, std::size_t track) {
    auto& e = entries_[group];
    if (!e.has_inverse[track]) {
      e.inverse[track] = inverse_of_sum(tracks_[track].covariance, e.mean_cov);
      e.has_inverse[track] = true;
    }
    return e.inverse[track];
  }

  const std::vector<std::size_t>& members(std::size_t group) const { return entries_[group].members; }

 private:
  struct Entry {
    KinematicState leader;
    Eigen::Matrix4d mean_cov;
    std::vector<std::size_t> members;
    std::vector<double> distance;
    std::vector<Eigen::Matrix4d, Eigen::aligned_allocator<Eigen::Matrix4d>> inverse;
    std::vector<bool> has_inverse;
  };

  std::span<const TrackSummary> tracks_;
  std::map<std::vector<std::size_t>, std::size_t> index_;
  std::vector<Entry> entries_;
};

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

double log_score_impl(GroupCache& cache, std::span<const TrackSummary> tracks,
                      std::span<const double> existence_sums, std::span<const int> labels,
                      double p0, AlphaMode mode, std::span<const ParticleCloud* const> clouds) {
  if (labels.size() != tracks.size() || existence_sums.size() != tracks.size()) {
    throw std::invalid_argument("partition, summaries and existence sums must have equal length");
  }
  const auto groups = groups_of(labels);
  const int group_count = static_cast<int>(groups.size());

  std::vector<std::size_t> ids;
  ids.reserve(groups.size());
  std::vector<std::size_t> owner(tracks.size(), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ids.push_back(cache.intern(groups[g]));
    for (auto m : groups[g]) owner[m] = g;
  }

  const double log_nonexistent =
      (p0 > 0.0 ? std::log(p0) : kNegInf) +
      (group_count > 1 ? (group_count - 1) * std::log1p(-p0) : 0.0);

  double total = 0.0;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (labels[i] == 0) continue;
    const double mass = clamp_unit(existence_sums[i]);
    const std::size_t own = owner[i];

    double log_exists = kNegInf;
    if (mode == AlphaMode::kEstimate) {
      double s = -0.5 * cache.distance(ids[own], i);
      for (std::size_t j = 0; j < groups.size(); ++j) {
        if (j != own) s += log_one_minus_membership(cache.distance(ids[j], i));
      }
      log_exists = mass > 0.0 ? std::log(mass) + s : kNegInf;
    } else {
      const ParticleCloud& cloud = *clouds[i];
      const Eigen::Index particles = cloud.states.cols();
      for (Eigen::Index l = 0; l < particles; ++l) {
        const double w = cloud.weights(l);
        if (w <= 0.0) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < groups.size(); ++j) {
          KinematicState leader = KinematicState::Zero();
          for (auto m : cache.members(ids[j])) leader += clouds[m]->states.col(l);
          leader /= static_cast<double>(groups[j].size());
          const KinematicState diff = cloud.states.col(l) - leader;
          const double d = diff.dot(cache.inverse(ids[j], i) * diff);
          s += (j == own) ? -0.5 * d : log_one_minus_membership(d);
        }
        log_exists = log_add(log_exists, std::log(w) + s);
      }
    }

    const double log_absent = mass < 1.0 ? std::log1p(-mass) + log_nonexistent : kNegInf;
    total += log_add(log_absent, log_exists);
    if (total == kNegInf) return total;
  }
  return total;
}

void validate_candidate(const GroupPartition& g, std::span<const TrackSummary> tracks) {
  if (g.size() != tracks.size()) {
    throw std::invalid_argument("candidate partition length differs from the track count");
  }
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].confirmed != (g.label(i) != 0)) {
      throw std::invalid_argument("candidate must label exactly the confirmed tracks");
    }
  }
}

// Normalize log weights; returns true when every weight is zero.
bool normalize_logs(const std::vector<double>& logs, std::vector<double>& out) {
  out.assign(logs.size(), 0.0);
  if (logs.empty()) return false;
  const double hi = *std::max_element(logs.begin(), logs.end());
  if (hi == kNegInf || !std::isfinite(hi)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(logs.size()));
    return true;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    out[i] = std::exp(logs[i] - hi);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return false;
}

}  // namespace

GroupPartition GroupPartition::canonicalize(std::span<const int> raw) {
  GroupPartition out;
  out.labels_.resize(raw.size(), 0);
  std::unordered_map<int, int> relabel;
  int next = 1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) throw std::invalid_argument("group labels must be nonnegative");
    if (raw[i] == 0) continue;
    auto [it, inserted] = relabel.emplace(raw[i], next);
    if (inserted) ++next;
    out.labels_[i] = it->second;
  }
  out.group_count_ = next - 1;
  return out;
}

std::vector<std::vector<std::size_t>> GroupPartition::groups() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(group_count_));
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 0) out[static_cast<std::size_t>(labels_[i] - 1)].push_back(i);
  }
  return out;
}

GroupPartition all_singletons(std::span<const bool> confirmed) {
  std::vector<int> raw(confirmed.size(), 0);
  int next = 1;
  for (std::size_t i = 0; i < confirmed.size(); ++i) {
    if (confirmed[i]) raw[i] = next++;
  }
  return GroupPartition::canonicalize(raw);
}

TrackSummary summarize(const ParticleCloud& cloud, bool confirmed, double regularization) {
  TrackSummary s;
  s.confirmed = confirmed;
  const double mass = cloud.mass();
  s.existence = clamp_unit(mass);
  const Eigen::Index n = cloud.states.cols();
  if (n == 0) {
    s.covariance = regularization * Eigen::Matrix4d::Identity();
    return s;
  }
  Eigen::VectorXd w = mass > 0.0 ? Eigen::VectorXd(cloud.weights / mass)
                                 : Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  s.estimate = cloud.states * w;
  const Eigen::Matrix4Xd centered = cloud.states.colwise() - s.estimate;
  s.covariance = centered * w.asDiagonal() * centered.transpose();
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  s.covariance += regularization * Eigen::Matrix4d::Identity();
  return s;
}

double mahalanobis_distance(const KinematicState& a, const Eigen::Matrix4d& pa,
                            const KinematicState& b, const Eigen::Matrix4d& pb) {
  const KinematicState diff = a - b;
  return diff.dot(inverse_of_sum(pa, pb) * diff);
}

double membership_prob(const TrackSummary& track, const KinematicState& leader,
                       const Eigen::Matrix4d& leader_cov, double p0, Existence branch) {
  if (branch == Existence::kNonexistent) return p0;
  return std::exp(-0.5 * mahalanobis_distance(track.estimate, track.covariance, leader, leader_cov));
}

double partition_log_score(std::span<const TrackSummary> tracks,
                           std::span<const double> existence_sums,
                           std::span<const int> labels, double p0) {
  GroupCache cache(tracks);
  return log_score_impl(cache, tracks, existence_sums, labels, p0, AlphaMode::kEstimate, {});
}

PartitionPmf partition_pmf(std::span<const TrackSummary> tracks,
                           std::span<const GroupPartition> candidates, double p0) {
  if (candidates.empty()) throw std::invalid_argument("partition pmf needs at least one candidate");
  GroupCache cache(tracks);
  const std::vector<double> ones(tracks.size(), 1.0);
  std::vector<double> logs;
  logs.reserve(candidates.size());
  for (const auto& g : candidates) {
    validate_candidate(g, tracks);
    logs.push_back(log_score_impl(cache, tracks, ones, g.labels(), p0, AlphaMode::kEstimate, {}));
  }
  PartitionPmf out;
  out.uniform_fallback = normalize_logs(logs, out.weights);
  return out;
}

PartitionHypothesisSet predict_partition_weights(std::span<const TrackSummary> tracks,
                                                 std::span<const double> existence_sums,
                                                 std::span<const GroupPartition> candidates,
                                                 const PartitionWeightOptions& options,
                                                 std::span<const ParticleCloud* const> clouds) {
  if (options.max_partitions < 1) {
    throw ConfigError("max_partitions", "must be at least 1");
  }
  if (candidates.empty()) throw std::invalid_argument("no candidate partitions");
  if (options.mode == AlphaMode::kParticle && clouds.size() != tracks.size()) {
    throw std::invalid_argument("particle-based weights need one cloud per track");
  }

  std::vector<GroupPartition> unique(candidates.begin(), candidates.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  GroupCache cache(tracks);
  std::vector<double> logs;
  logs.reserve(unique.size());
  for (const auto& g : unique) {
    validate_candidate(g, tracks);
    logs.push_back(log_score_impl(cache, tracks, existence_sums, g.labels(), options.p0,
                                  options.mode, clouds));
  }

  // `unique` is lexicographically sorted, so a stable sort on weight breaks
  // ties by label order.
  std::vector<std::size_t> order(unique.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logs[a] > logs[b]; });
  order.resize(std::min(order.size(), options.max_partitions));

  PartitionHypothesisSet out;
  std::vector<double> kept_logs;
  for (auto idx : order) {
    out.partitions.push_back(unique[idx]);
    kept_logs.push_back(logs[idx]);
  }
  out.uniform_fallback = normalize_logs(kept_logs, out.prior_weights);
  out.posterior_weights = out.prior_weights;
  return out;
}

std::vector<GroupPartition> generate_candidates(std::span<const TrackSummary> tracks,
                                                std::span<const GroupPartition> previous,
                                                const CandidateOptions& options) {
  if (!(options.gate > 0.0)) throw ConfigError("gate", "must be positive");
  const std::size_t n = tracks.size();
  std::vector<std::size_t> confirmed;
  std::vector<bool> is_confirmed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (tracks[i].confirmed) {
      confirmed.push_back(i);
      is_confirmed[i] = true;
    }
  }
  if (confirmed.empty()) {
    return {GroupPartition::canonicalize(std::vector<int>(n, 0))};
  }

  // Pairwise distances among confirmed tracks.
  const std::size_t c = confirmed.size();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a + 1; b < c; ++b) {
      const auto& ta = tracks[confirmed[a]];
      const auto& tb = tracks[confirmed[b]];
      const double d = mahalanobis_distance(ta.estimate, ta.covariance, tb.estimate, tb.covariance);
      dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d;
      dist(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = d;
    }
  }

  // Connected components of the gating graph.
  std::vector<std::size_t> parent(c);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a + 1; b < c; ++b) {
      if (dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) < options.gate) {
        parent[find(a)] = find(b);
      }
    }
  }
  std::vector<int> component_raw(n, 0);
  for (std::size_t a = 0; a < c; ++a) {
    component_raw[confirmed[a]] = static_cast<int>(find(a)) + 1;
  }
  const GroupPartition components = GroupPartition::canonicalize(component_raw);

  std::vector<GroupPartition> out;
  auto push = [&](const GroupPartition& g) {
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  };
  push(components);
  {
    std::vector<int> raw(n, 0);
    int next = 1;
    for (auto i : confirmed) raw[i] = next++;
    push(GroupPartition::canonicalize(raw));
  }
  for (const auto& g : previous) {
    if (g.size() != n) throw std::invalid_argument("previous partition has wrong length");
    push(g);
  }
  const std::size_t mandatory = out.size();

  const auto groups = components.groups();
  std::vector<GroupPartition> axis_splits;
  std::vector<GroupPartition> member_splits;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& members = groups[gi];
    if (members.size() < 2) continue;
    const int fresh = components.group_count() + 1;

    // Split at the widest gap along the principal axis of member positions.
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (auto m : members) mean += Eigen::Vector2d(tracks[m].estimate(0), tracks[m].estimate(2));
    mean /= static_cast<double>(members.size());
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (auto m : members) {
      const Eigen::Vector2d d = Eigen::Vector2d(tracks[m].estimate(0), tracks[m].estimate(2)) - mean;
      scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
    const Eigen::Vector2d axis = eig.eigenvectors().col(1);
    std::vector<std::pair<double, std::size_t>> proj;
    for (auto m : members) {
      proj.emplace_back(axis.dot(Eigen::Vector2d(tracks[m].estimate(0), tracks[m].estimate(2)) - mean), m);
    }
    std::sort(proj.begin(), proj.end());
    std::size_t cut = 1;
    double widest = -1.0;
    for (std::size_t k = 1; k < proj.size(); ++k) {
      const double gap = proj[k].first - proj[k - 1].first;
      if (gap > widest) {
        widest = gap;
        cut = k;
      }
    }
    std::vector<int> raw = components.labels();
    for (std::size_t k = cut; k < proj.size(); ++k) raw[proj[k].second] = fresh;
    axis_splits.push_back(GroupPartition::canonicalize(raw));

    for (auto m : members) {
      std::vector<int> one = components.labels();
      one[m] = fresh;
      member_splits.push_back(GroupPartition::canonicalize(one));
    }
  }

  // Merge neighbours, closest group pairs first.
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> position(n, 0);
  for (std::size_t a = 0; a < c; ++a) position[confirmed[a]] = a;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      double closest = std::numeric_limits<double>::infinity();
      for (auto ma : groups[a]) {
        for (auto mb : groups[b]) {
          closest = std::min(closest, dist(static_cast<Eigen::Index>(position[ma]),
                                           static_cast<Eigen::Index>(position[mb])));
        }
      }
      pairs.emplace_back(closest, a, b);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return std::get<0>(x) < std::get<0>(y); });

  for (const auto& g : axis_splits) push(g);
  for (const auto& [d, a, b] : pairs) {
    std::vector<int> raw = components.labels();
    for (auto m : groups[b]) raw[m] = static_cast<int>(a) + 1;
    push(GroupPartition::canonicalize(raw));
  }
  for (const auto& g : member_splits) push(g);

  out.resize(std::max(mandatory, std::min(out.size(), options.cap)));
  return out;
}

GroupPartition reexpress(const LabeledPartition& previous, std::span<const TrackId> ids,
                         std::span<const bool> confirmed) {
  if (ids.size() != confirmed.size()) throw std::invalid_argument("ids and flags differ in length");
  std::unordered_map<TrackId, int> label_of;
  int max_label = 0;
  for (std::size_t i = 0; i < previous.ids.size(); ++i) {
    label_of[previous.ids[i]] = previous.labels[i];
    max_label = std::max(max_label, previous.labels[i]);
  }
  std::vector<int> raw(ids.size(), 0);
  int fresh = max_label + 1;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!confirmed[i]) continue;
    auto it = label_of.find(ids[i]);
    raw[i] = (it != label_of.end() && it->second > 0) ? it->second : fresh++;
  }
  return GroupPartition::canonicalize(raw);
}

}  // namespace gtbp
