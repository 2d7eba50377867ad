#include "gtbp/motion.hpp"

#include <cmath>
#include <stdexcept>

namespace gtbp {
namespace {

void require_finite(const KinematicState& s) {
  if (!s.allFinite()) {
    throw std::invalid_argument("kinematic state has non-finite components");
  }
}

void require_positive_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("time step must be positive");
  }
}

}  // namespace

void MotionModel::validate() const {
  require_positive_dt(dt);
  if (!(sigma_v >= 0.0)) {
    throw std::invalid_argument("process noise std must be nonnegative");
  }
  if (kind == MotionKind::kConstantTurn && omega == 0.0) {
    throw InvalidModelError("constant-turn model requires a nonzero turn rate");
  }
}

GroupContext GroupContext::from_members(std::span<const KinematicState> members) {
  GroupContext ctx;
  ctx.members.assign(members.begin(), members.end());
  ctx.leader = virtual_leader(members);
  ctx.offsets.reserve(members.size());
  for (const auto& m : members) {
    ctx.offsets.emplace_back(m - ctx.leader);
  }
  return ctx;
}

Eigen::Matrix4d cv_matrix(double dt) {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 1) = dt;
  f(2, 3) = dt;
  return f;
}

Eigen::Matrix4d ct_matrix(double omega, double dt) {
  if (omega == 0.0) {
    throw InvalidModelError("constant-turn model requires a nonzero turn rate");
  }
  const double s = std::sin(omega * dt);
  const double c = std::cos(omega * dt);
  Eigen::Matrix4d f;
  // clang-format off
  f << 1.0, s / omega,         0.0, -(1.0 - c) / omega,
       0.0, c,                 0.0, -s,
       0.0, (1.0 - c) / omega, 1.0, s / omega,
       0.0, s,                 0.0, c;
  // clang-format on
  return f;
}

Eigen::Matrix<double, 4, 2> noise_gain(double dt) {
  Eigen::Matrix<double, 4, 2> g = Eigen::Matrix<double, 4, 2>::Zero();
  g(0, 0) = 0.5 * dt * dt;
  g(1, 0) = dt;
  g(2, 1) = 0.5 * dt * dt;
  g(3, 1) = dt;
  return g;
}

Eigen::Matrix4d process_covariance(double dt, double sigma_v) {
  const auto g = noise_gain(dt);
  return sigma_v * sigma_v * g * g.transpose();
}

NoiseDraw draw_noise(double sigma_v, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double ax = normal(rng);
  const double ay = normal(rng);
  return {sigma_v * ax, sigma_v * ay};
}

KinematicState cv_step(const KinematicState& s, double dt, const std::optional<NoiseDraw>& noise) {
  require_positive_dt(dt);
  require_finite(s);
  KinematicState out(s(0) + dt * s(1), s(1), s(2) + dt * s(3), s(3));
  if (noise) {
    const double h = 0.5 * dt * dt;
    out(0) += h * (*noise)(0);
    out(1) += dt * (*noise)(0);
    out(2) += h * (*noise)(1);
    out(3) += dt * (*noise)(1);
  }
  return out;
}

KinematicState ct_step(const KinematicState& s, double omega, double dt) {
  require_positive_dt(dt);
  require_finite(s);
  return ct_matrix(omega, dt) * s;
}

KinematicState propagate(const KinematicState& s, const MotionModel& model) {
  if (model.kind == MotionKind::kConstantTurn) {
    return ct_step(s, model.omega, model.dt);
  }
  return cv_step(s, model.dt);
}

KinematicState virtual_leader(std::span<const KinematicState> members) {
  if (members.empty()) {
    throw std::invalid_argument("virtual leader of an empty group");
  }
  KinematicState sum = KinematicState::Zero();
  for (const auto& m : members) {
    sum += m;
  }
  return sum / static_cast<double>(members.size());
}

std::vector<KinematicState> group_step(std::span<const KinematicState> members,
                                       const MotionModel& model,
                                       std::span<const NoiseDraw> noise) {
  model.validate();
  if (members.empty()) {
    throw std::invalid_argument("group step needs at least one member");
  }
  if (!noise.empty() && noise.size() != members.size()) {
    throw std::invalid_argument("group step needs one noise draw per member");
  }
  const KinematicState leader = virtual_leader(members);
  const KinematicState moved = propagate(leader, model);
  const auto gain = noise_gain(model.dt);

  std::vector<KinematicState> out;
  out.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    require_finite(members[i]);
    KinematicState next = moved + (members[i] - leader);
    if (!noise.empty()) {
      next += gain * noise[i];
    }
    out.push_back(next);
  }
  return out;
}

}  // namespace gtbp
