#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gtbp/types.hpp"

namespace gtbp {

/// White acceleration draw (m/s^2) entering the state through the gain G.
using NoiseDraw = Eigen::Vector2d;

enum class MotionKind { kConstantVelocity, kConstantTurn };

struct MotionModel {
  MotionKind kind = MotionKind::kConstantVelocity;
  double dt = 2.0;       // s
  double sigma_v = 10.0; // m/s^2
  double omega = 0.0;    // rad/s, constant turn only

  void validate() const;
};

/// Members of one group together with their virtual leader and offsets.
struct GroupContext {
  std::vector<KinematicState> members;
  KinematicState leader = KinematicState::Zero();
  std::vector<KinematicState> offsets;

  static GroupContext from_members(std::span<const KinematicState> members);
};

Eigen::Matrix4d cv_matrix(double dt);
Eigen::Matrix4d ct_matrix(double omega, double dt);
Eigen::Matrix<double, 4, 2> noise_gain(double dt);

/// Q = sigma_v^2 G G^T.
Eigen::Matrix4d process_covariance(double dt, double sigma_v);

NoiseDraw draw_noise(double sigma_v, Rng& rng);

KinematicState cv_step(const KinematicState& s, double dt,
                       const std::optional<NoiseDraw>& noise = std::nullopt);

/// Throws InvalidModelError for omega == 0; use cv_step instead.
KinematicState ct_step(const KinematicState& s, double omega, double dt);

/// Deterministic single step under `model` (CV or CT), no noise.
KinematicState propagate(const KinematicState& s, const MotionModel& model);

/// Componentwise mean of the members. Throws on an empty list.
KinematicState virtual_leader(std::span<const KinematicState> members);

/// Virtual-leader group transition: every member moves as the CV-propagated
/// leader plus its own offset plus its own noise draw. `noise` is either empty
/// (noiseless) or holds one draw per member.
std::vector<KinematicState> group_step(std::span<const KinematicState> members,
                                       const MotionModel& model,
                                       std::span<const NoiseDraw> noise);

}  // namespace gtbp
