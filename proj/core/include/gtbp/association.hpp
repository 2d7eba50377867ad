#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gtbp/types.hpp"

namespace gtbp {

/// One batch of measurements together with the sensor and clutter model.
struct ScanFrame {
  int k = 0;
  std::vector<Measurement> measurements;
  double clutter_mean = 10.0;     // mu_c
  double clutter_density = 1.0 / (std::numbers::pi * 5000.0 * 5000.0);  // f_c, 1/m^2
  double detection_prob = 0.995;  // p_d
  double birth_mean = 1e-4;       // mu_b
  double meas_std = 10.0;         // sigma_w, m

  [[nodiscard]] std::size_t size() const { return measurements.size(); }

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Gaussian position likelihood f(z | x) with covariance sigma_w^2 I.
double measurement_likelihood(const Measurement& z, const KinematicState& x, double meas_std);

/// Legacy-track factor q(x, r, a; z). `a` ranges over 0..m, 0 meaning missed.
double legacy_factor(const KinematicState& x, bool exists, std::size_t a, const ScanFrame& frame);

/// New-track factor v(x, 1, b; z_m) for the existing branch. `birth_density`
/// is f_b evaluated at x. Zero whenever b >= 1.
double new_factor(const Measurement& z, const KinematicState& x, double birth_density, std::size_t b,
                  const ScanFrame& frame);

/// xi(0) for a measurement given equally weighted birth particles.
double xi_zero(const Measurement& z, const Eigen::Matrix4Xd& birth_particles, const ScanFrame& frame);

/// Inputs of iterative association: beta is n x (m+1), column 0 the missed
/// hypothesis; xi holds xi(0) per measurement (xi(b >= 1) is 1).
struct AssociationProblem {
  Eigen::MatrixXd beta;
  Eigen::VectorXd xi;

  [[nodiscard]] Eigen::Index targets() const { return beta.rows(); }
  [[nodiscard]] Eigen::Index measurements() const { return xi.size(); }
};

/// kappa is n x (m+1) with kappa(i,0) = 1; iota is m x (n+1) with iota(m,0) = 1.
struct AssociationMarginals {
  Eigen::MatrixXd kappa;
  Eigen::MatrixXd iota;
  int iterations = 0;
  bool converged = false;

  /// Association probabilities p(a_i = a), rows summing to 1.
  [[nodiscard]] Eigen::MatrixXd target_beliefs(const Eigen::MatrixXd& beta) const;
  /// Association probabilities p(b_m = b), rows summing to 1.
  [[nodiscard]] Eigen::MatrixXd measurement_beliefs(const Eigen::VectorXd& xi) const;
};

struct BpOptions {
  int max_iterations = 100;
  double tolerance = 1e-5;
  /// Run exactly max_iterations, ignoring the tolerance.
  bool fixed_iterations = false;
};

/// Loopy sum-product association between targets and measurements.
///
/// Throws NumericalError(i, m) if a message becomes non-finite and
/// std::invalid_argument for malformed input.
AssociationMarginals bp_associate(const AssociationProblem& problem, const BpOptions& options = {});

/// f(z_m | x_l) for every particle column l and measurement m (L x m).
Eigen::MatrixXd likelihood_matrix(const Eigen::Matrix4Xd& particles, const ScanFrame& frame);

/// Accumulate alpha * (sum_l q(x_l,1,a) w_l + I(a) (1 - sum_l w_l)) into `row`
/// (length m+1). `likelihood` is the matrix from likelihood_matrix.
void add_beta_contribution(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, const Eigen::MatrixXd& likelihood,
                           const Eigen::VectorXd& weights, double alpha, const ScanFrame& frame);

/// beta over all tracks from per-partition predicted clouds; clouds[g][i] is
/// track i under partition g.
Eigen::MatrixXd compute_beta(std::span<const std::vector<ParticleCloud>> clouds,
                             std::span<const double> alphas, const ScanFrame& frame);

/// New-target evidence score per measurement in [0,1]:
/// (xi-1) / ((xi-1) + sum_i beta_i(m)/beta_i(0)).
Eigen::VectorXd censor_scores(const AssociationProblem& problem);

/// Measurements scoring below `threshold` get xi(0) forced to 1 and will not
/// spawn a track. Returns the indices that survive, ascending.
std::vector<std::size_t> censor_new(AssociationProblem& problem, double threshold);

}  // namespace gtbp
