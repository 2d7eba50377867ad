#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library code they are compared against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct AssociationMarginals {
  Eigen::MatrixXd targets;       // n x (m+1), p(a_i = a)
  Eigen::MatrixXd measurements;  // m x (n+1), p(b_m = b)
};

// Brute force over every consistent association vector a (distinct nonzero
// entries). xi(b >= 1) is 1, so only unclaimed measurements contribute xi(0).
inline AssociationMarginals enumerate_association(const Eigen::MatrixXd& beta, const Eigen::VectorXd& xi) {
  const int n = static_cast<int>(beta.rows());
  const int m = static_cast<int>(xi.size());
  AssociationMarginals out;
  out.targets = Eigen::MatrixXd::Zero(n, m + 1);
  out.measurements = Eigen::MatrixXd::Zero(m, n + 1);
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  std::vector<bool> used(static_cast<std::size_t>(m + 1), false);
  double total = 0.0;

  std::function<void(int, double)> recurse = [&](int i, double weight) {
    if (i == n) {
      double w = weight;
      for (int j = 1; j <= m; ++j) {
        if (!used[static_cast<std::size_t>(j)]) w *= xi(j - 1);
      }
      total += w;
      for (int t = 0; t < n; ++t) out.targets(t, a[static_cast<std::size_t>(t)]) += w;
      for (int j = 1; j <= m; ++j) {
        int claimed = 0;
        for (int t = 0; t < n; ++t) {
          if (a[static_cast<std::size_t>(t)] == j) claimed = t + 1;
        }
        out.measurements(j - 1, claimed) += w;
      }
      return;
    }
    for (int choice = 0; choice <= m; ++choice) {
      if (choice > 0 && used[static_cast<std::size_t>(choice)]) continue;
      a[static_cast<std::size_t>(i)] = choice;
      if (choice > 0) used[static_cast<std::size_t>(choice)] = true;
      recurse(i + 1, weight * beta(i, choice));
      if (choice > 0) used[static_cast<std::size_t>(choice)] = false;
    }
  };
  recurse(0, 1.0);
  out.targets /= total;
  out.measurements /= total;
  return out;
}

// OSPA by trying every injection of the smaller set into the larger one.
inline double ospa_brute_force(const std::vector<Eigen::Vector2d>& x, const std::vector<Eigen::Vector2d>& y,
                               double c, double p) {
  if (x.empty() && y.empty()) return 0.0;
  const auto& small = x.size() <= y.size() ? x : y;
  const auto& large = x.size() <= y.size() ? y : x;
  if (small.empty()) return c;
  std::vector<int> perm(large.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < small.size(); ++i) {
      const double d = std::min(c, (small[i] - large[static_cast<std::size_t>(perm[i])]).norm());
      s += std::pow(d, p);
    }
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double n = static_cast<double>(large.size());
  const double penalty = std::pow(c, p) * static_cast<double>(large.size() - small.size());
  return std::pow((best + penalty) / n, 1.0 / p);
}

// Unnormalized group-structure weight written out as a plain product:
// prod_i [ r_i * P_{i,g(i)} * prod_{j != g(i)} (1 - P_{i,j}) + (1 - r_i) * p0 (1-p0)^(N-1) ]
// with P_{i,j} = exp(-d/2), d the Mahalanobis distance from track i to the
// mean of group j under covariance P_i + mean group covariance.
inline double partition_weight(const std::vector<Eigen::Vector4d>& est, const std::vector<Eigen::Matrix4d>& cov,
                               const std::vector<double>& existence, const std::vector<int>& labels, double p0) {
  int groups = 0;
  for (int l : labels) groups = std::max(groups, l);
  std::vector<Eigen::Vector4d> leader(static_cast<std::size_t>(groups + 1), Eigen::Vector4d::Zero());
  std::vector<Eigen::Matrix4d> mean_cov(static_cast<std::size_t>(groups + 1), Eigen::Matrix4d::Zero());
  std::vector<int> size(static_cast<std::size_t>(groups + 1), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    const auto g = static_cast<std::size_t>(labels[i]);
    leader[g] += est[i];
    mean_cov[g] += cov[i];
    ++size[g];
  }
  int nonempty = 0;
  for (int g = 1; g <= groups; ++g) {
    if (size[static_cast<std::size_t>(g)] == 0) continue;
    ++nonempty;
    leader[static_cast<std::size_t>(g)] /= size[static_cast<std::size_t>(g)];
    mean_cov[static_cast<std::size_t>(g)] /= size[static_cast<std::size_t>(g)];
  }
  double weight = 1.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    double exists = 1.0;
    for (int g = 1; g <= groups; ++g) {
      if (size[static_cast<std::size_t>(g)] == 0) continue;
      const Eigen::Vector4d diff = est[i] - leader[static_cast<std::size_t>(g)];
      const Eigen::Matrix4d s = cov[i] + mean_cov[static_cast<std::size_t>(g)];
      const double d = diff.dot(s.inverse() * diff);
      const double member = std::exp(-0.5 * d);
      exists *= (g == labels[i]) ? member : 1.0 - member;
    }
    const double absent = p0 * std::pow(1.0 - p0, nonempty - 1);
    weight *= existence[i] * exists + (1.0 - existence[i]) * absent;
  }
  return weight;
}

// Textbook Kalman filter for the planar nearly-constant-velocity model with
// position measurements.
class Kalman {
 public:
  Kalman(const Eigen::Vector4d& x0, const Eigen::Matrix4d& p0, double dt, double sigma_v, double sigma_w)
      : x_(x0), p_(p0) {
    f_.setIdentity();
    f_(0, 1) = dt;
    f_(2, 3) = dt;
    Eigen::Matrix<double, 4, 2> g = Eigen::Matrix<double, 4, 2>::Zero();
    g(0, 0) = 0.5 * dt * dt;
    g(1, 0) = dt;
    g(2, 1) = 0.5 * dt * dt;
    g(3, 1) = dt;
    q_ = sigma_v * sigma_v * g * g.transpose();
    h_.setZero();
    h_(0, 0) = 1.0;
    h_(1, 2) = 1.0;
    r_ = sigma_w * sigma_w * Eigen::Matrix2d::Identity();
  }

  void step(const Eigen::Vector2d& z) {
    x_ = f_ * x_;
    p_ = f_ * p_ * f_.transpose() + q_;
    const Eigen::Matrix2d s = h_ * p_ * h_.transpose() + r_;
    const Eigen::Matrix<double, 4, 2> k = p_ * h_.transpose() * s.inverse();
    x_ += k * (z - h_ * x_);
    p_ = (Eigen::Matrix4d::Identity() - k * h_) * p_;
  }

  [[nodiscard]] const Eigen::Vector4d& state() const { return x_; }

 private:
  Eigen::Vector4d x_;
  Eigen::Matrix4d p_;
  Eigen::Matrix4d f_;
  Eigen::Matrix4d q_;
  Eigen::Matrix<double, 2, 4> h_;
  Eigen::Matrix2d r_;
};

}  // namespace oracle
