#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gtbp {

/// Planar kinematic state [px, vx, py, vy] in metres and metres per second.
using KinematicState = Eigen::Vector4d;

/// Planar position measurement in metres.
using Measurement = Eigen::Vector2d;

using TrackId = std::uint64_t;

using Rng = std::mt19937_64;

/// Weighted particle approximation of a single potential target.
///
/// Column l of `states` carries particle l; `weights` are not normalized, their
/// sum is the existence mass of the target.
struct ParticleCloud {
  Eigen::Matrix4Xd states;
  Eigen::VectorXd weights;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
  [[nodiscard]] double mass() const { return weights.sum(); }
};

/// Raised when a motion model is used outside its domain (e.g. a zero turn rate).
class InvalidModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when message passing or weighting produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long row, long col)
      : std::runtime_error(what + " at (" + std::to_string(row) + ", " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  [[nodiscard]] long row() const { return row_; }
  [[nodiscard]] long col() const { return col_; }

 private:
  long row_;
  long col_;
};

/// Invalid user configuration; `field` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace gtbp
