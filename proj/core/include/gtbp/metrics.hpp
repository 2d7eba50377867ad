#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gtbp/sim.hpp"
#include "gtbp/types.hpp"

namespace gtbp {

using Point = Eigen::Vector2d;

/// OSPA distance between two finite point sets with cutoff c and order p.
/// Both sets empty gives 0.
double ospa(std::span<const Point> a, std::span<const Point> b, double cutoff, double order);

/// OSPA from a matrix of (already cut-off) base distances between the
/// elements of two sets.
double ospa_from_distances(const Eigen::MatrixXd& distances, double cutoff, double order);

/// Tracks as step -> position maps.
struct TrackSet {
  struct Entry {
    TrackId id = 0;
    bool grouped = false;
    std::map<int, Point> positions;
  };
  std::vector<Entry> tracks;

  /// Appends or extends the track with `id`.
  void add(TrackId id, int step, const Point& position, bool grouped = false);

  static TrackSet from_truth(const GroundTruth& truth);
};

struct OspaParams {
  double cutoff = 50.0;    // c
  double order = 1.0;      // p, across tracks
  double base_order = 2.0; // q, across the window
  int window = 10;         // w
  std::vector<double> weights;  // per window offset, oldest first; empty = uniform

  void validate() const;
};

/// OSPA(2) at `step` over the window [step-w+1, step].
double ospa2(const TrackSet& truth, const TrackSet& estimate, const OspaParams& params, int step);

struct OspaBreakdown {
  double total = 0.0;
  double group = 0.0;   // truth tracks flagged grouped
  double single = 0.0;  // the remaining truth tracks
};

/// Total OSPA(2) and its split by truth subset. Estimates follow the truth
/// they are assigned to in the total; unassigned ones join the subset of the
/// nearest truth track.
OspaBreakdown ospa2_breakdown(const TrackSet& truth, const TrackSet& estimate, const OspaParams& params,
                              int step);

/// Windowed base distance between two tracks, or a negative value when
/// neither is present inside the window.
double track_distance(const TrackSet::Entry& x, const TrackSet::Entry& y, const OspaParams& params, int step);

}  // namespace gtbp
