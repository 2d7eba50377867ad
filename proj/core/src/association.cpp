#include "gtbp/association.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gtbp {
namespace {

void require_finite_nonnegative(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument(std::string(what) + " entries must be finite and nonnegative");
      }
    }
  }
}

void check_message(double v, Eigen::Index i, Eigen::Index m) {
  if (!std::isfinite(v)) throw NumericalError("non-finite association message", i, m);
}

// mu(i, m) from the current nu(m, i), with exclusive sums taken from prefix
// and suffix sums rather than by subtraction.
void update_target_messages(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& nu, Eigen::MatrixXd& mu,
                            Eigen::VectorXd& prefix) {
  const Eigen::Index n = beta.rows();
  const Eigen::Index m = beta.cols() - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    prefix(0) = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) prefix(j + 1) = prefix(j) + beta(i, j + 1) * nu(j, i);
    double suffix = 0.0;
    for (Eigen::Index j = m - 1; j >= 0; --j) {
      const double b = beta(i, j + 1);
      double value = 0.0;
      if (b > 0.0) {
        value = b / (beta(i, 0) + prefix(j) + suffix);
        check_message(value, i, j);
      }
      mu(i, j) = value;
      suffix += b * nu(j, i);
    }
  }
}

void update_measurement_messages(const Eigen::VectorXd& xi, const Eigen::MatrixXd& mu, Eigen::MatrixXd& nu,
                                 Eigen::VectorXd& prefix) {
  const Eigen::Index n = mu.rows();
  const Eigen::Index m = xi.size();
  for (Eigen::Index j = 0; j < m; ++j) {
    prefix(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) + mu(i, j);
    double suffix = 0.0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      const double value = 1.0 / (xi(j) + prefix(i) + suffix);
      check_message(value, i, j);
      nu(j, i) = value;
      suffix += mu(i, j);
    }
  }
}

void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double s = m.row(r).sum();
    if (s > 0.0) m.row(r) /= s;
  }
}

Eigen::MatrixXd beliefs_from(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& nu) {
  Eigen::MatrixXd b = beta;
  b.rightCols(beta.cols() - 1).array() *= nu.transpose().array();
  normalize_rows(b);
  return b;
}

}  // namespace

void ScanFrame::validate() const {
  if (!(clutter_mean > 0.0)) throw ConfigError("clutter_mean", "must be positive");
  if (!(clutter_density > 0.0)) throw ConfigError("clutter_density", "must be positive");
  if (!(detection_prob > 0.0 && detection_prob <= 1.0)) {
    throw ConfigError("detection_prob", "must lie in (0, 1]");
  }
  if (!(birth_mean > 0.0)) throw ConfigError("birth_mean", "must be positive");
  if (!(meas_std > 0.0)) throw ConfigError("meas_std", "must be positive");
}

double measurement_likelihood(const Measurement& z, const KinematicState& x, double meas_std) {
  const double var = meas_std * meas_std;
  const double dx = z(0) - x(0);
  const double dy = z(1) - x(2);
  return std::exp(-0.5 * (dx * dx + dy * dy) / var) / (2.0 * std::numbers::pi * var);
}

double legacy_factor(const KinematicState& x, bool exists, std::size_t a, const ScanFrame& frame) {
  if (a > frame.size()) throw std::out_of_range("association index exceeds measurement count");
  if (!exists) return a == 0 ? 1.0 : 0.0;
  if (a == 0) return 1.0 - frame.detection_prob;
  return frame.detection_prob * measurement_likelihood(frame.measurements[a - 1], x, frame.meas_std) /
         (frame.clutter_mean * frame.clutter_density);
}

double new_factor(const Measurement& z, const KinematicState& x, double birth_density, std::size_t b,
                  const ScanFrame& frame) {
  if (b != 0) return 0.0;
  return frame.birth_mean * birth_density * measurement_likelihood(z, x, frame.meas_std) /
         (frame.clutter_mean * frame.clutter_density);
}

double xi_zero(const Measurement& z, const Eigen::Matrix4Xd& birth_particles, const ScanFrame& frame) {
  const Eigen::Index count = birth_particles.cols();
  if (count == 0) return 1.0;
  double sum = 0.0;
  for (Eigen::Index l = 0; l < count; ++l) {
    sum += measurement_likelihood(z, birth_particles.col(l), frame.meas_std);
  }
  return frame.birth_mean / (frame.clutter_mean * frame.clutter_density) * sum /
             static_cast<double>(count) +
         1.0;
}

Eigen::MatrixXd AssociationMarginals::target_beliefs(const Eigen::MatrixXd& beta) const {
  Eigen::MatrixXd b = beta.cwiseProduct(kappa);
  normalize_rows(b);
  return b;
}

Eigen::MatrixXd AssociationMarginals::measurement_beliefs(const Eigen::VectorXd& xi) const {
  Eigen::MatrixXd b = iota;
  b.col(0).array() *= xi.array();
  normalize_rows(b);
  return b;
}

AssociationMarginals bp_associate(const AssociationProblem& problem, const BpOptions& options) {
  if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const Eigen::Index n = problem.beta.rows();
  const Eigen::Index m = problem.xi.size();
  if (problem.beta.cols() != m + 1) {
    throw std::invalid_argument("beta must have one more column than there are measurements");
  }
  require_finite_nonnegative(problem.beta, "beta");
  require_finite_nonnegative(problem.xi, "xi");

  AssociationMarginals out;
  out.kappa = Eigen::MatrixXd::Ones(n, m + 1);
  out.iota = Eigen::MatrixXd::Ones(m, n + 1);
  if (n == 0 || m == 0) {
    out.converged = true;
    return out;
  }

  Eigen::MatrixXd nu = Eigen::MatrixXd::Ones(m, n);
  Eigen::MatrixXd mu(n, m);
  Eigen::VectorXd prefix(std::max(n, m) + 1);
  update_target_messages(problem.beta, nu, mu, prefix);

  Eigen::MatrixXd previous = beliefs_from(problem.beta, nu);
  for (int it = 1; it <= options.max_iterations; ++it) {
    update_measurement_messages(problem.xi, mu, nu, prefix);
    update_target_messages(problem.beta, nu, mu, prefix);
    out.iterations = it;
    Eigen::MatrixXd current = beliefs_from(problem.beta, nu);
    const double change = (current - previous).norm();
    previous = std::move(current);
    if (!options.fixed_iterations && change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  if (options.fixed_iterations) out.converged = true;

  out.kappa.rightCols(m) = nu.transpose();
  out.iota.rightCols(n) = mu.transpose();
  return out;
}

Eigen::MatrixXd likelihood_matrix(const Eigen::Matrix4Xd& particles, const ScanFrame& frame) {
  const Eigen::Index count = particles.cols();
  const auto m = static_cast<Eigen::Index>(frame.size());
  Eigen::MatrixXd out(count, m);
  const double var = frame.meas_std * frame.meas_std;
  const double scale = 1.0 / (2.0 * std::numbers::pi * var);
  const double half_inv = -0.5 / var;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Measurement& z = frame.measurements[static_cast<std::size_t>(j)];
    const auto dx = particles.row(0).array() - z(0);
    const auto dy = particles.row(2).array() - z(1);
    out.col(j) = (scale * ((dx.square() + dy.square()) * half_inv).exp()).transpose().matrix();
  }
  return out;
}

void add_beta_contribution(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, const Eigen::MatrixXd& likelihood,
                           const Eigen::VectorXd& weights, double alpha, const ScanFrame& frame) {
  if (row.size() != likelihood.cols() + 1 || likelihood.rows() != weights.size()) {
    throw std::invalid_argument("beta contribution dimensions disagree");
  }
  const double mass = weights.sum();
  row(0) += alpha * ((1.0 - frame.detection_prob) * mass + (1.0 - mass));
  if (likelihood.cols() == 0) return;
  const double factor = alpha * frame.detection_prob / (frame.clutter_mean * frame.clutter_density);
  row.tail(likelihood.cols()) += factor * (weights.transpose() * likelihood);
}

Eigen::MatrixXd compute_beta(std::span<const std::vector<ParticleCloud>> clouds,
                             std::span<const double> alphas, const ScanFrame& frame) {
  if (clouds.size() != alphas.size()) throw std::invalid_argument("one weight per partition required");
  const auto m = static_cast<Eigen::Index>(frame.size());
  const Eigen::Index n = clouds.empty() ? 0 : static_cast<Eigen::Index>(clouds[0].size());
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(n, m + 1);
  for (std::size_t g = 0; g < clouds.size(); ++g) {
    if (static_cast<Eigen::Index>(clouds[g].size()) != n) {
      throw std::invalid_argument("every partition must carry every track");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& cloud = clouds[g][static_cast<std::size_t>(i)];
      add_beta_contribution(beta.row(i), likelihood_matrix(cloud.states, frame), cloud.weights, alphas[g],
                            frame);
    }
  }
  return beta;
}

Eigen::VectorXd censor_scores(const AssociationProblem& problem) {
  const Eigen::Index m = problem.xi.size();
  Eigen::VectorXd score(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double evidence = problem.xi(j) - 1.0;
    if (!(evidence > 0.0)) {
      score(j) = 0.0;
      continue;
    }
    double claimed = 0.0;
    for (Eigen::Index i = 0; i < problem.beta.rows(); ++i) {
      const double b = problem.beta(i, j + 1);
      if (b <= 0.0) continue;
      const double b0 = problem.beta(i, 0);
      claimed += b0 > 0.0 ? b / b0 : std::numeric_limits<double>::infinity();
    }
    score(j) = std::isfinite(claimed) ? evidence / (evidence + claimed) : 0.0;
  }
  return score;
}

std::vector<std::size_t> censor_new(AssociationProblem& problem, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("censor_threshold", "must lie in (0, 1]");
  }
  const Eigen::VectorXd score = censor_scores(problem);
  std::vector<std::size_t> kept;
  for (Eigen::Index j = 0; j < score.size(); ++j) {
    if (score(j) >= threshold) {
      kept.push_back(static_cast<std::size_t>(j));
    } else {
      problem.xi(j) = 1.0;
    }
  }
  return kept;
}

}  // namespace gtbp
