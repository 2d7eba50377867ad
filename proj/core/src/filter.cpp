#include "gtbp/filter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "gtbp/motion.hpp"

namespace gtbp {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

void require_unit(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
}

GroupPartition initial_partition(const FilterState& state, const FilterConfig& config,
                                 std::span<const TrackSummary> summaries, std::span<const bool> confirmed,
                                 PartitionHypothesisSet& out, std::span<const ParticleCloud* const> clouds) {
  const GroupPartition singletons = all_singletons(confirmed);
  if (config.grouping == GroupingMode::kDisabled) {
    out.partitions = {singletons};
    out.prior_weights = {1.0};
    out.posterior_weights = {1.0};
    return singletons;
  }
  std::vector<double> mass(summaries.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) mass[i] = state.tracks[i].cloud.mass();

  std::vector<GroupPartition> candidates;
  if (config.grouping == GroupingMode::kSingletonsOnly) {
    candidates.push_back(singletons);
  } else {
    std::vector<TrackId> ids;
    ids.reserve(state.tracks.size());
    for (const auto& t : state.tracks) ids.push_back(t.id);
    std::vector<GroupPartition> previous;
    for (const auto& p : state.partitions) previous.push_back(reexpress(p, ids, confirmed));
    candidates = generate_candidates(summaries, previous, {config.gate, config.candidate_cap});
  }
  PartitionWeightOptions options{config.max_partitions, config.p0, config.alpha_mode};
  out = predict_partition_weights(summaries, mass, candidates, options, clouds);
  return singletons;
}

}  // namespace

void FilterConfig::validate() const {
  if (particles < 1) throw ConfigError("filter.particles", "must be at least 1");
  if (max_partitions < 1) throw ConfigError("filter.max_partitions", "must be at least 1");
  if (max_tracks < 1) throw ConfigError("filter.max_tracks", "must be at least 1");
  require_unit(declare_threshold, "filter.declare_threshold");
  require_unit(prune_threshold, "filter.prune_threshold");
  require_unit(p0, "filter.p0");
  if (!(survival_prob > 0.0 && survival_prob <= 1.0)) {
    throw ConfigError("filter.survival_prob", "must lie in (0, 1]");
  }
  if (!(gate > 0.0)) throw ConfigError("filter.gate", "must be positive");
  if (candidate_cap < 1) throw ConfigError("filter.candidate_cap", "must be at least 1");
  if (bp_max_iterations < 1) throw ConfigError("filter.bp_max_iterations", "must be at least 1");
  if (!(bp_tolerance > 0.0)) throw ConfigError("filter.bp_tolerance", "must be positive");
  if (!(censor_threshold > 0.0 && censor_threshold <= 1.0)) {
    throw ConfigError("filter.censor_threshold", "must lie in (0, 1]");
  }
  if (!(process_std >= 0.0)) throw ConfigError("filter.process_std", "must be nonnegative");
  if (!(dt > 0.0)) throw ConfigError("filter.dt", "must be positive");
}

Prediction predict(const FilterState& state, const FilterConfig& config, Rng& rng) {
  const std::size_t n = state.tracks.size();
  const std::size_t count = config.particles;
  auto confirmed = std::make_unique<bool[]>(n);
  std::vector<TrackSummary> summaries;
  std::vector<const ParticleCloud*> clouds;
  summaries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = state.tracks[i];
    if (t.cloud.size() != count) throw std::invalid_argument("track particle count differs from L");
    confirmed[i] = t.confirmed;
    summaries.push_back(summarize(t.cloud, t.confirmed));
    clouds.push_back(&t.cloud);
  }

  Prediction out;
  initial_partition(state, config, summaries, std::span<const bool>(confirmed.get(), n), out.hypotheses,
                    clouds);

  const double dt = config.dt;
  const double sigma = config.process_std;
  const auto gain = noise_gain(dt);
  std::normal_distribution<double> normal(0.0, 1.0);

  out.clouds.resize(out.hypotheses.size());
  for (std::size_t g = 0; g < out.hypotheses.size(); ++g) {
    const GroupPartition& part = out.hypotheses.partitions[g];
    std::vector<Eigen::Matrix2Xd> noise(n);
    for (std::size_t i = 0; i < n; ++i) {
      noise[i].resize(2, static_cast<Eigen::Index>(count));
      for (Eigen::Index l = 0; l < noise[i].cols(); ++l) {
        noise[i](0, l) = sigma * normal(rng);
        noise[i](1, l) = sigma * normal(rng);
      }
    }

    auto& predicted = out.clouds[g];
    predicted.resize(n);
    std::vector<bool> grouped(n, false);
    if (config.grouping != GroupingMode::kDisabled) {
      for (const auto& members : part.groups()) {
        if (members.size() < 2) continue;
        Eigen::Matrix4Xd leader = Eigen::Matrix4Xd::Zero(4, static_cast<Eigen::Index>(count));
        for (auto m : members) leader += state.tracks[m].cloud.states;
        leader /= static_cast<double>(members.size());
        // CV displacement of the leader, shared by every member.
        Eigen::Matrix4Xd shift = Eigen::Matrix4Xd::Zero(4, leader.cols());
        shift.row(0) = dt * leader.row(1);
        shift.row(2) = dt * leader.row(3);
        for (auto m : members) {
          grouped[m] = true;
          predicted[m].states = state.tracks[m].cloud.states + shift + gain * noise[m];
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& source = state.tracks[i].cloud;
      predicted[i].weights = config.survival_prob * source.weights;
      if (grouped[i]) continue;
      predicted[i].states.resize(4, source.states.cols());
      for (Eigen::Index l = 0; l < source.states.cols(); ++l) {
        predicted[i].states.col(l) = cv_step(source.states.col(l), dt, NoiseDraw(noise[i].col(l)));
      }
    }
  }
  return out;
}

Eigen::MatrixXd legacy_beta(Prediction& prediction, const ScanFrame& frame) {
  const std::size_t partitions = prediction.clouds.size();
  const std::size_t n = partitions == 0 ? 0 : prediction.clouds[0].size();
  const auto m = static_cast<Eigen::Index>(frame.size());
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m + 1);
  prediction.likelihood.assign(partitions, std::vector<Eigen::MatrixXd>(n));
  for (std::size_t g = 0; g < partitions; ++g) {
    const double alpha = prediction.hypotheses.prior_weights[g];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cloud = prediction.clouds[g][i];
      auto& lik = prediction.likelihood[g][i];
      lik = likelihood_matrix(cloud.states, frame);
      add_beta_contribution(beta.row(static_cast<Eigen::Index>(i)), lik, cloud.weights, alpha, frame);
    }
  }
  return beta;
}

std::vector<Eigen::Matrix4Xd> sample_births(const FilterState& state, const ScanFrame& frame,
                                            const FilterConfig& config, Rng& rng) {
  BirthSampler sampler(state.previous_measurements, frame.meas_std, config.birth);
  std::vector<Eigen::Matrix4Xd> out;
  out.reserve(frame.size());
  for (const auto& z : frame.measurements) out.push_back(sampler.sample(z, config.particles, rng));
  return out;
}

LegacyUpdate update_legacy(const Prediction& prediction, const AssociationMarginals& marginals,
                           const ScanFrame& frame) {
  const std::size_t partitions = prediction.clouds.size();
  const std::size_t n = partitions == 0 ? 0 : prediction.clouds[0].size();
  const auto m = static_cast<Eigen::Index>(frame.size());
  const double miss = 1.0 - frame.detection_prob;
  const double hit = frame.detection_prob / (frame.clutter_mean * frame.clutter_density);

  LegacyUpdate out;
  out.clouds.assign(partitions, std::vector<ParticleCloud>(n));
  out.evidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(partitions), static_cast<Eigen::Index>(n));
  out.existence.assign(n, 0.0);
  out.estimates.assign(n, KinematicState::Zero());
  out.zero_mass.assign(n, false);

  std::vector<KinematicState> weighted_sum(n, KinematicState::Zero());
  for (std::size_t g = 0; g < partitions; ++g) {
    const double alpha = prediction.hypotheses.prior_weights[g];
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto& predicted = prediction.clouds[g][i];
      const double k0 = marginals.kappa(ii, 0);
      Eigen::VectorXd factor = Eigen::VectorXd::Constant(predicted.weights.size(), miss * k0);
      if (m > 0) {
        const Eigen::VectorXd k = marginals.kappa.row(ii).tail(m).transpose();
        if (prediction.likelihood.empty()) {
          factor += hit * (likelihood_matrix(predicted.states, frame) * k);
        } else {
          factor += hit * (prediction.likelihood[g][i] * k);
        }
      }
      const Eigen::VectorXd wa = predicted.weights.cwiseProduct(factor);
      const double wb = (1.0 - predicted.weights.sum()) * k0;
      const double evidence = wa.sum() + wb;
      out.evidence(static_cast<Eigen::Index>(g), ii) = evidence;

      auto& updated = out.clouds[g][i];
      updated.states = predicted.states;
      if (evidence > 0.0 && std::isfinite(evidence)) {
        updated.weights = wa / evidence;
      } else {
        updated.weights = Eigen::VectorXd::Zero(wa.size());
      }
      out.existence[i] += alpha * updated.weights.sum();
      weighted_sum[i] += alpha * (updated.states * updated.weights);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.existence[i] = std::clamp(out.existence[i], 0.0, 1.0);
    if (out.existence[i] > 0.0) {
      out.estimates[i] = weighted_sum[i] / out.existence[i];
    } else {
      out.zero_mass[i] = true;
    }
  }
  return out;
}

PartitionPmf partition_posterior(std::span<const double> alpha, const Eigen::MatrixXd& evidence) {
  if (static_cast<Eigen::Index>(alpha.size()) != evidence.rows()) {
    throw std::invalid_argument("one evidence row per partition required");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(alpha.size(), 0.0);
  for (std::size_t g = 0; g < alpha.size(); ++g) {
    double s = alpha[g] > 0.0 ? std::log(alpha[g]) : kNegInf;
    for (Eigen::Index i = 0; i < evidence.cols() && s != kNegInf; ++i) {
      const double e = evidence(static_cast<Eigen::Index>(g), i);
      s += e > 0.0 ? std::log(e) : kNegInf;
    }
    logs[g] = s;
  }
  PartitionPmf out;
  out.weights.assign(alpha.size(), 0.0);
  if (alpha.empty()) return out;
  const double hi = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(hi)) {
    std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(alpha.size()));
    out.uniform_fallback = true;
    return out;
  }
  double total = 0.0;
  for (std::size_t g = 0; g < logs.size(); ++g) {
    out.weights[g] = std::exp(logs[g] - hi);
    total += out.weights[g];
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

std::vector<NewTrack> update_new(const ScanFrame& frame, const std::vector<Eigen::Matrix4Xd>& births,
                                 const AssociationMarginals& marginals, std::span<const std::size_t> kept) {
  if (births.size() != frame.size()) throw std::invalid_argument("one birth cloud per measurement required");
  std::vector<bool> spawn(frame.size(), false);
  for (auto j : kept) spawn.at(j) = true;
  const double scale = frame.birth_mean / (frame.clutter_mean * frame.clutter_density);

  std::vector<NewTrack> out(frame.size());
  for (std::size_t j = 0; j < frame.size(); ++j) {
    auto& t = out[j];
    t.cloud.states = births[j];
    const Eigen::Index count = births[j].cols();
    t.cloud.weights = Eigen::VectorXd::Zero(count);
    t.spawned = spawn[j];
    if (!spawn[j] || count == 0) continue;

    const auto jj = static_cast<Eigen::Index>(j);
    const double i0 = marginals.iota(jj, 0);
    Eigen::VectorXd wa(count);
    for (Eigen::Index l = 0; l < count; ++l) {
      wa(l) = scale * measurement_likelihood(frame.measurements[j], births[j].col(l), frame.meas_std) * i0 /
              static_cast<double>(count);
    }
    const double wb = marginals.iota.row(jj).sum();
    const double total = wa.sum() + wb;
    if (!(total > 0.0)) continue;
    t.cloud.weights = wa / total;
    t.existence = std::clamp(t.cloud.weights.sum(), 0.0, 1.0);
    if (t.existence > 0.0) t.estimate = births[j] * t.cloud.weights / t.cloud.weights.sum();
  }
  return out;
}

std::vector<TrackEstimate> extract(const FilterState& state, const FilterConfig& config) {
  std::vector<TrackEstimate> out;
  for (const auto& t : state.tracks) {
    const double mass = t.cloud.mass();
    if (mass < 1e-12) continue;
    TrackEstimate e;
    e.id = t.id;
    e.existence = std::clamp(mass, 0.0, 1.0);
    e.state = t.cloud.states * t.cloud.weights / mass;
    e.confirmed = e.existence > config.declare_threshold;
    e.is_new = t.birth_step == state.step;
    out.push_back(e);
  }
  return out;
}

std::vector<std::size_t> systematic_resample(const Eigen::VectorXd& weights, std::size_t count, Rng& rng) {
  const double total = weights.sum();
  if (!(total > 0.0) || weights.size() == 0) throw std::invalid_argument("resampling needs positive total weight");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = total / static_cast<double>(count);
  double u = unit(rng) * step;
  std::vector<std::size_t> out;
  out.reserve(count);
  double cumulative = weights(0);
  Eigen::Index j = 0;
  const Eigen::Index last = weights.size() - 1;
  for (std::size_t k = 0; k < count; ++k) {
    while (u > cumulative && j < last) cumulative += weights(++j);
    out.push_back(static_cast<std::size_t>(j));
    u += step;
  }
  return out;
}

std::vector<std::size_t> select_survivors(std::span<const double> existence, const FilterConfig& config) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < existence.size(); ++i) {
    if (existence[i] >= config.prune_threshold && existence[i] > 0.0) kept.push_back(i);
  }
  if (kept.size() > config.max_tracks) {
    std::stable_sort(kept.begin(), kept.end(),
                     [&](std::size_t a, std::size_t b) { return existence[a] > existence[b]; });
    kept.resize(config.max_tracks);
    std::sort(kept.begin(), kept.end());
  }
  return kept;
}

StepReport step(FilterState& state, const ScanFrame& frame, const FilterConfig& config, Rng& rng) {
  config.validate();
  frame.validate();
  if (frame.k != state.step + 1) throw std::invalid_argument("frame index must follow the filter step");

  StepReport report;
  report.step = frame.k;
  report.legacy_count = state.tracks.size();
  report.measurement_count = frame.size();
  const std::size_t n = state.tracks.size();
  const std::size_t m = frame.size();
  const std::size_t count = config.particles;

  const auto t0 = Clock::now();
  Prediction prediction = predict(state, config, rng);
  report.partition_fallback = prediction.hypotheses.uniform_fallback;
  const auto t1 = Clock::now();

  AssociationProblem problem;
  problem.beta = legacy_beta(prediction, frame);
  const auto births = sample_births(state, frame, config, rng);
  problem.xi.resize(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    problem.xi(static_cast<Eigen::Index>(j)) = xi_zero(frame.measurements[j], births[j], frame);
  }
  const auto kept = censor_new(problem, config.censor_threshold);
  report.spawned = kept.size();
  const BpOptions bp{config.bp_max_iterations, config.bp_tolerance, config.bp_fixed_iterations};
  const AssociationMarginals marginals = bp_associate(problem, bp);
  report.bp_iterations = marginals.iterations;
  report.bp_converged = marginals.converged;
  const auto t2 = Clock::now();

  const LegacyUpdate legacy = update_legacy(prediction, marginals, frame);
  const PartitionPmf posterior = partition_posterior(prediction.hypotheses.prior_weights, legacy.evidence);
  report.partition_fallback = report.partition_fallback || posterior.uniform_fallback;
  const std::vector<NewTrack> fresh = update_new(frame, births, marginals, kept);
  for (bool z : legacy.zero_mass) report.zero_mass = report.zero_mass || z;
  const auto t3 = Clock::now();

  std::vector<double> existence(legacy.existence);
  for (const auto& t : fresh) existence.push_back(t.existence);
  report.tracks_before_prune = existence.size();
  const auto survivors = select_survivors(existence, config);

  if (config.grouping != GroupingMode::kDisabled) {
    std::vector<TrackId> ids;
    for (const auto& t : state.tracks) ids.push_back(t.id);
    std::vector<LabeledPartition> stored;
    for (std::size_t g = 0; g < prediction.hypotheses.size(); ++g) {
      const auto& labels = prediction.hypotheses.partitions[g].labels();
      stored.push_back({ids, labels, posterior.weights[g]});
      report.partitions.push_back({ids, labels, prediction.hypotheses.prior_weights[g], posterior.weights[g]});
    }
    state.partitions = std::move(stored);
  }

  std::vector<Track> next;
  next.reserve(survivors.size());
  for (auto s : survivors) {
    Track t;
    const double e = existence[s];
    KinematicState estimate;
    Eigen::Matrix4Xd pool;
    Eigen::VectorXd pool_weights;
    if (s < n) {
      const Track& old = state.tracks[s];
      t.id = old.id;
      t.birth_step = old.birth_step;
      estimate = legacy.estimates[s];
      const std::size_t partitions = legacy.clouds.size();
      pool.resize(4, static_cast<Eigen::Index>(partitions * count));
      pool_weights.resize(pool.cols());
      for (std::size_t g = 0; g < partitions; ++g) {
        const auto offset = static_cast<Eigen::Index>(g * count);
        const auto& cloud = legacy.clouds[g][s];
        pool.middleCols(offset, cloud.states.cols()) = cloud.states;
        pool_weights.segment(offset, cloud.weights.size()) = posterior.weights[g] * cloud.weights;
      }
    } else {
      const NewTrack& nt = fresh[s - n];
      t.id = state.next_id++;
      t.birth_step = frame.k;
      estimate = nt.estimate;
      pool = nt.cloud.states;
      pool_weights = nt.cloud.weights;
    }
    t.cloud.states.resize(4, static_cast<Eigen::Index>(count));
    if (pool_weights.sum() > 0.0) {
      const auto idx = systematic_resample(pool_weights, count, rng);
      for (std::size_t l = 0; l < count; ++l) {
        t.cloud.states.col(static_cast<Eigen::Index>(l)) = pool.col(static_cast<Eigen::Index>(idx[l]));
      }
    } else {
      t.cloud.states = pool.leftCols(static_cast<Eigen::Index>(count));
    }
    t.existence = e;
    t.cloud.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(count), e / static_cast<double>(count));
    t.confirmed = e > config.declare_threshold;
    if (e >= 1e-12) report.estimates.push_back({t.id, e, estimate, t.confirmed, s >= n});
    next.push_back(std::move(t));
  }
  state.tracks = std::move(next);
  report.tracks_after_prune = state.tracks.size();
  state.previous_measurements = frame.measurements;
  state.step = frame.k;
  const auto t4 = Clock::now();

  report.timings = {elapsed_ms(t0, t1), elapsed_ms(t1, t2), elapsed_ms(t2, t3), elapsed_ms(t3, t4)};
  return report;
}

Tracker::Tracker(FilterConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
  config_.validate();
}

StepReport Tracker::step(const ScanFrame& frame) { return gtbp::step(state_, frame, config_, rng_); }

}  // namespace gtbp
