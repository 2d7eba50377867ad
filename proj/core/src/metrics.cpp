#include "gtbp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gtbp/assignment.hpp"

namespace gtbp {
namespace {

void check_ospa_params(double cutoff, double order) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("OSPA cutoff must be positive");
  if (!(order >= 1.0)) throw std::invalid_argument("OSPA order must be at least 1");
}

double window_weight(const OspaParams& params, int offset) {
  if (params.weights.empty()) return 1.0;
  return params.weights[static_cast<std::size_t>(offset)];
}

bool present_in_window(const TrackSet::Entry& t, int first, int last) {
  auto it = t.positions.lower_bound(first);
  return it != t.positions.end() && it->first <= last;
}

std::vector<std::size_t> active(const TrackSet& set, int first, int last) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < set.tracks.size(); ++i) {
    if (present_in_window(set.tracks[i], first, last)) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXd distance_matrix(const TrackSet& truth, const std::vector<std::size_t>& t_idx,
                                const TrackSet& estimate, const std::vector<std::size_t>& e_idx,
                                const OspaParams& params, int step) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(t_idx.size()), static_cast<Eigen::Index>(e_idx.size()));
  for (std::size_t i = 0; i < t_idx.size(); ++i) {
    for (std::size_t j = 0; j < e_idx.size(); ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          track_distance(truth.tracks[t_idx[i]], estimate.tracks[e_idx[j]], params, step);
    }
  }
  return d;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& d, const std::vector<Eigen::Index>& rows,
                          const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d(rows[i], cols[j]);
    }
  }
  return out;
}

}  // namespace

double ospa_from_distances(const Eigen::MatrixXd& distances, double cutoff, double order) {
  check_ospa_params(cutoff, order);
  const Eigen::Index n = distances.rows();
  const Eigen::Index m = distances.cols();
  const Eigen::Index larger = std::max(n, m);
  if (larger == 0) return 0.0;
  const Eigen::MatrixXd cost = distances.cwiseMin(cutoff).array().pow(order).matrix();
  double total = 0.0;
  if (n > 0 && m > 0) total = assignment_cost(cost, solve_assignment(cost));
  total += std::pow(cutoff, order) * static_cast<double>(std::abs(n - m));
  return std::pow(total / static_cast<double>(larger), 1.0 / order);
}

double ospa(std::span<const Point> a, std::span<const Point> b, double cutoff, double order) {
  check_ospa_params(cutoff, order);
  Eigen::MatrixXd d(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::min(cutoff, (a[i] - b[j]).norm());
    }
  }
  return ospa_from_distances(d, cutoff, order);
}

void TrackSet::add(TrackId id, int step, const Point& position, bool grouped) {
  for (auto& t : tracks) {
    if (t.id == id) {
      t.positions[step] = position;
      return;
    }
  }
  Entry e;
  e.id = id;
  e.grouped = grouped;
  e.positions[step] = position;
  tracks.push_back(std::move(e));
}

TrackSet TrackSet::from_truth(const GroundTruth& truth) {
  TrackSet out;
  for (std::size_t s = 0; s < truth.steps.size(); ++s) {
    for (const auto& p : truth.steps[s]) {
      out.add(p.id, static_cast<int>(s) + 1, Point(p.state(0), p.state(2)), p.grouped);
    }
  }
  return out;
}

void OspaParams::validate() const {
  check_ospa_params(cutoff, order);
  if (!(base_order >= 1.0)) throw std::invalid_argument("OSPA(2) base order must be at least 1");
  if (window < 1) throw std::invalid_argument("OSPA(2) window must be at least 1");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != window) {
      throw std::invalid_argument("OSPA(2) needs one weight per window step");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("OSPA(2) weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("OSPA(2) weights must sum to 1");
  }
}

double track_distance(const TrackSet::Entry& x, const TrackSet::Entry& y, const OspaParams& params, int step) {
  const int first = step - params.window + 1;
  double num = 0.0;
  double den = 0.0;
  for (int s = std::max(first, 1); s <= step; ++s) {
    const auto ix = x.positions.find(s);
    const auto iy = y.positions.find(s);
    const bool hx = ix != x.positions.end();
    const bool hy = iy != y.positions.end();
    if (!hx && !hy) continue;
    const double d = (hx && hy) ? std::min(params.cutoff, (ix->second - iy->second).norm()) : params.cutoff;
    const double w = window_weight(params, s - first);
    num += w * std::pow(d, params.base_order);
    den += w;
  }
  if (den <= 0.0) return -1.0;
  return std::pow(num / den, 1.0 / params.base_order);
}

double ospa2(const TrackSet& truth, const TrackSet& estimate, const OspaParams& params, int step) {
  return ospa2_breakdown(truth, estimate, params, step).total;
}

OspaBreakdown ospa2_breakdown(const TrackSet& truth, const TrackSet& estimate, const OspaParams& params,
                              int step) {
  params.validate();
  const int first = step - params.window + 1;
  const auto t_idx = active(truth, first, step);
  const auto e_idx = active(estimate, first, step);
  const Eigen::MatrixXd d = distance_matrix(truth, t_idx, estimate, e_idx, params, step);

  OspaBreakdown out;
  out.total = ospa_from_distances(d, params.cutoff, params.order);

  std::vector<int> owner(e_idx.size(), -1);
  if (!t_idx.empty() && !e_idx.empty()) {
    const auto assigned = solve_assignment(d.cwiseMin(params.cutoff).array().pow(params.order).matrix());
    for (std::size_t i = 0; i < assigned.size(); ++i) {
      if (assigned[i] >= 0) owner[static_cast<std::size_t>(assigned[i])] = static_cast<int>(i);
    }
    for (std::size_t j = 0; j < e_idx.size(); ++j) {
      if (owner[j] >= 0) continue;
      Eigen::Index best = 0;
      d.col(static_cast<Eigen::Index>(j)).minCoeff(&best);
      owner[j] = static_cast<int>(best);
    }
  }

  for (bool grouped : {true, false}) {
    std::vector<Eigen::Index> rows;
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < t_idx.size(); ++i) {
      if (truth.tracks[t_idx[i]].grouped == grouped) rows.push_back(static_cast<Eigen::Index>(i));
    }
    for (std::size_t j = 0; j < e_idx.size(); ++j) {
      const bool belongs = owner[j] >= 0 ? truth.tracks[t_idx[static_cast<std::size_t>(owner[j])]].grouped == grouped
                                         : !grouped;
      if (belongs) cols.push_back(static_cast<Eigen::Index>(j));
    }
    const double value = ospa_from_distances(submatrix(d, rows, cols), params.cutoff, params.order);
    (grouped ? out.group : out.single) = value;
  }
  return out;
}

}  // namespace gtbp
