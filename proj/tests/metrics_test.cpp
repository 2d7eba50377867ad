#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gtbp/assignment.hpp"
#include "gtbp/metrics.hpp"
#include "oracles.hpp"

using namespace gtbp;

namespace {

std::vector<Point> random_points(std::mt19937& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(u(gen), u(gen));
  return out;
}

TEST(Assignment, MatchesBruteForce) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const int r = dim(gen);
    const int c = dim(gen);
    Eigen::MatrixXd cost(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) cost(i, j) = u(gen);
    }
    const auto a = solve_assignment(cost);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(r));
    std::vector<int> cols(static_cast<std::size_t>(std::max(r, c)));
    std::iota(cols.begin(), cols.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (int i = 0; i < r; ++i) {
        const int j = cols[static_cast<std::size_t>(i)];
        if (j < c) s += cost(i, j);
      }
      // Count only injections that match min(r, c) pairs.
      int matched = 0;
      for (int i = 0; i < r; ++i) matched += cols[static_cast<std::size_t>(i)] < c;
      if (matched == std::min(r, c)) best = std::min(best, s);
    } while (std::next_permutation(cols.begin(), cols.end()));
    EXPECT_NEAR(assignment_cost(cost, a), best, 1e-9);
    int matched = 0;
    for (int j : a) matched += j >= 0;
    EXPECT_EQ(matched, std::min(r, c));
  }
}

TEST(Ospa, MatchesBruteForce) {
  std::mt19937 gen(2);
  std::uniform_int_distribution<int> size(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_points(gen, static_cast<std::size_t>(size(gen)));
    const auto b = random_points(gen, static_cast<std::size_t>(size(gen)));
    for (double p : {1.0, 2.0}) {
      EXPECT_NEAR(ospa(a, b, 50.0, p), oracle::ospa_brute_force(a, b, 50.0, p), 1e-9);
    }
  }
}

TEST(Ospa, SpecialCases) {
  const std::vector<Point> none;
  const std::vector<Point> three = {Point(0, 0), Point(1, 1), Point(5, 5)};
  EXPECT_EQ(ospa(none, none, 50.0, 1.0), 0.0);
  EXPECT_NEAR(ospa(three, three, 50.0, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(ospa(none, three, 50.0, 1.0), 50.0, 1e-12);
  EXPECT_THROW(ospa(none, three, 0.0, 1.0), std::invalid_argument);
}

TEST(Ospa2, Defaults) {
  const OspaParams p;
  EXPECT_EQ(p.cutoff, 50.0);
  EXPECT_EQ(p.order, 1.0);
  EXPECT_EQ(p.base_order, 2.0);
  EXPECT_EQ(p.window, 10);
}

TEST(Ospa2, PerfectEstimateIsZero) {
  TrackSet truth;
  for (int k = 1; k <= 30; ++k) {
    truth.add(1, k, Point(k, 2 * k), true);
    if (k > 5) truth.add(2, k, Point(-k, 7), false);
  }
  for (int k = 1; k <= 30; ++k) EXPECT_NEAR(ospa2(truth, truth, OspaParams{}, k), 0.0, 1e-12);
}

TEST(Ospa2, ConstantOffset) {
  TrackSet truth;
  TrackSet est;
  for (int k = 1; k <= 20; ++k) {
    truth.add(1, k, Point(10.0 * k, 0));
    est.add(7, k, Point(10.0 * k, 10.0));
  }
  EXPECT_NEAR(ospa2(truth, est, OspaParams{}, 15), 10.0, 1e-12);
}

TEST(Ospa2, WindowAverageWithMissingSteps) {
  // Estimate present only in the last 5 of 10 window steps with a 10 m error:
  // base distance sqrt((5*50^2 + 5*10^2)/10).
  TrackSet truth;
  TrackSet est;
  for (int k = 1; k <= 10; ++k) truth.add(1, k, Point(0, 0));
  for (int k = 6; k <= 10; ++k) est.add(1, k, Point(10, 0));
  EXPECT_NEAR(ospa2(truth, est, OspaParams{}, 10), std::sqrt((5 * 2500.0 + 5 * 100.0) / 10.0), 1e-12);
}

TEST(Ospa2, WeightedWindow) {
  TrackSet truth;
  TrackSet est;
  for (int k = 1; k <= 2; ++k) truth.add(1, k, Point(0, 0));
  est.add(1, 1, Point(30, 0));
  est.add(1, 2, Point(0, 0));
  OspaParams p;
  p.window = 2;
  p.weights = {0.25, 0.75};
  EXPECT_NEAR(ospa2(truth, est, p, 2), std::sqrt(0.25 * 900.0), 1e-12);
  p.weights = {0.5, 0.6};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Ospa2, MatchesSetOspaOnTrackDistances) {
  std::mt19937 gen(3);
  std::normal_distribution<double> nd(0.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    TrackSet truth;
    TrackSet est;
    for (int k = 1; k <= 12; ++k) {
      for (TrackId id = 1; id <= 3; ++id) {
        truth.add(id, k, Point(100.0 * id, k));
        if ((k + id) % 4 != 0) est.add(id + 10, k, Point(100.0 * id + nd(gen), k + nd(gen)));
      }
    }
    const OspaParams p;
    Eigen::MatrixXd d(3, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            track_distance(truth.tracks[i], est.tracks[j], p, 12);
      }
    }
    // With equal-sized sets and order 1 OSPA is the mean of the best matching.
    std::vector<int> perm = {0, 1, 2};
    double best = 1e300;
    do {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += std::min(50.0, d(i, perm[static_cast<std::size_t>(i)]));
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(ospa2(truth, est, p, 12), best / 3.0, 1e-9);
  }
}

TEST(Ospa2, BreakdownBySubset) {
  TrackSet truth;
  TrackSet est;
  for (int k = 1; k <= 10; ++k) {
    truth.add(1, k, Point(0, 0), true);
    truth.add(2, k, Point(0, 1000), false);
    est.add(1, k, Point(3, 4), false);
    est.add(2, k, Point(0, 1000), false);
    est.add(3, k, Point(0, 1010), false);  // spurious, nearest to the single target
  }
  const auto b = ospa2_breakdown(truth, est, OspaParams{}, 10);
  EXPECT_NEAR(b.group, 5.0, 1e-12);
  EXPECT_NEAR(b.single, (0.0 + 50.0) / 2.0, 1e-12);
  EXPECT_NEAR(b.total, (5.0 + 0.0 + 50.0) / 3.0, 1e-12);
}

TEST(Ospa2, EmptySets) {
  TrackSet truth;
  TrackSet est;
  EXPECT_EQ(ospa2(truth, est, OspaParams{}, 5), 0.0);
  for (int k = 1; k <= 5; ++k) truth.add(1, k, Point(0, 0));
  EXPECT_NEAR(ospa2(truth, est, OspaParams{}, 5), 50.0, 1e-12);
}

TEST(TrackDistance, AbsentBothReturnsNegative) {
  TrackSet::Entry a;
  TrackSet::Entry b;
  a.positions[1] = Point(0, 0);
  b.positions[2] = Point(0, 0);
  EXPECT_LT(track_distance(a, b, OspaParams{}, 50), 0.0);
}

}  // namespace
