#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gtbp/sim.hpp"

using namespace gtbp;

namespace {

const TruthPoint* find(const std::vector<TruthPoint>& step, TrackId id) {
  for (const auto& p : step) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

TEST(Scenario1, Lifespans) {
  const auto spec = build_scenario1();
  const auto truth = generate_truth(spec);
  ASSERT_EQ(truth.duration(), 100);
  EXPECT_EQ(truth.steps[0].size(), 3u);
  EXPECT_EQ(truth.steps[19].size(), 3u);
  EXPECT_EQ(truth.steps[20].size(), 4u);
  EXPECT_EQ(truth.steps[79].size(), 4u);
  EXPECT_EQ(truth.steps[80].size(), 1u);
  EXPECT_EQ(truth.steps[80][0].id, 4u);
  EXPECT_FALSE(truth.steps[80][0].grouped);
  EXPECT_TRUE(find(truth.steps[0], 1)->grouped);
}

TEST(Scenario1, InitialStates) {
  const auto truth = generate_truth(build_scenario1());
  const auto* t1 = find(truth.steps[0], 1);
  const auto* t2 = find(truth.steps[0], 2);
  EXPECT_EQ(t1->state, KinematicState(800, 10, 3255, -10));
  EXPECT_EQ(t2->state, KinematicState(740, 10 * std::numbers::sqrt2, 3000, 0));
  const auto* t4 = find(truth.steps[20], 4);
  EXPECT_EQ(t4->state, KinematicState(1010, 8, 2500, -8));
}

TEST(Scenario1, OuterTargetsMirror) {
  const auto truth = generate_truth(build_scenario1());
  for (int k = 0; k < 80; ++k) {
    const auto* a = find(truth.steps[static_cast<std::size_t>(k)], 1);
    const auto* b = find(truth.steps[static_cast<std::size_t>(k)], 3);
    EXPECT_NEAR(a->state(0), b->state(0), 1e-9);
    EXPECT_NEAR(a->state(2) - 3000.0, 3000.0 - b->state(2), 1e-9);
    EXPECT_NEAR(a->state(3), -b->state(3), 1e-9);
  }
}

TEST(Scenario1, MergeThenSplit) {
  const auto truth = generate_truth(build_scenario1());
  auto spread = [&](int k) {
    const auto& s = truth.steps[static_cast<std::size_t>(k - 1)];
    return std::abs(find(s, 1)->state(2) - find(s, 3)->state(2));
  };
  EXPECT_GT(spread(1), 400.0);
  EXPECT_LT(spread(30), 80.0);
  EXPECT_LT(spread(50), 80.0);
  EXPECT_GT(spread(80), 200.0);
  // In formation the three move in parallel at the same speed.
  const auto& mid = truth.steps[39];
  for (TrackId id : {1u, 3u}) {
    EXPECT_NEAR(find(mid, id)->state(1), find(mid, 2)->state(1), 1e-9);
    EXPECT_NEAR(find(mid, id)->state(3), 0.0, 1e-9);
  }
}

TEST(Scenario2, LineOffsets) {
  const auto truth = generate_truth(build_scenario2(5, 50.0));
  for (const auto& step : truth.steps) {
    ASSERT_EQ(step.size(), 5u);
    for (std::size_t i = 1; i < 5; ++i) {
      const KinematicState d = step[i].state - step[0].state;
      EXPECT_NEAR(d(0), 0.0, 1e-6);
      EXPECT_NEAR(d(2), -50.0 * static_cast<double>(i), 1e-6);
    }
  }
  EXPECT_THROW(build_scenario2(0, 50.0), ConfigError);
}

TEST(Synthesize, PerfectSensor) {
  ScenarioSpec spec = build_scenario1();
  spec.detection_prob = 1.0;
  spec.clutter_mean = 0.0;
  spec.assumed_clutter_mean = 1e-3;
  const auto truth = generate_truth(spec);
  Rng rng(3);
  const auto frames = synthesize(truth, spec, rng);
  ASSERT_EQ(frames.size(), 100u);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    EXPECT_EQ(frames[k].size(), truth.steps[k].size());
    EXPECT_EQ(frames[k].k, static_cast<int>(k + 1));
    EXPECT_NEAR(frames[k].clutter_mean, 1e-3, 1e-15);
  }
}

TEST(Synthesize, ClutterRateAndNoise) {
  ScenarioSpec spec = build_scenario2(1, 50.0);
  spec.detection_prob = 1.0;
  const auto truth = generate_truth(spec);
  double count = 0.0;
  double sq = 0.0;
  double n_noise = 0.0;
  for (std::uint64_t run = 0; run < 300; ++run) {
    Rng rng(100 + run);
    const auto frames = synthesize(truth, spec, rng);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& f = frames[k];
      count += static_cast<double>(f.size()) - 1.0;
      // The detection is the measurement nearest to the target; clutter is
      // kilometres away on average.
      const KinematicState& x = truth.steps[k][0].state;
      double best = 1e18;
      Measurement nearest = Measurement::Zero();
      for (const auto& z : f.measurements) {
        const double d = std::hypot(z(0) - x(0), z(1) - x(2));
        if (d < best) {
          best = d;
          nearest = z;
        }
      }
      sq += std::pow(nearest(0) - x(0), 2) + std::pow(nearest(1) - x(2), 2);
      n_noise += 2.0;
      for (const auto& z : f.measurements) EXPECT_LE(z.norm(), spec.region_radius + 100.0);
    }
  }
  const double mean_clutter = count / (300.0 * spec.duration);
  EXPECT_NEAR(mean_clutter, spec.clutter_mean, 0.02 * spec.clutter_mean);
  EXPECT_NEAR(std::sqrt(sq / n_noise), spec.meas_std, 0.03 * spec.meas_std);
}

TEST(Synthesize, FrameModel) {
  ScenarioSpec spec = build_scenario1();
  const auto truth = generate_truth(spec);
  Rng rng(4);
  const auto frames = synthesize(truth, spec, rng);
  EXPECT_NEAR(frames[0].birth_mean, 1e-5 * spec.clutter_mean, 1e-18);
  EXPECT_NEAR(frames[0].clutter_density, 1.0 / (std::numbers::pi * 5000.0 * 5000.0), 1e-20);
  EXPECT_EQ(frames[0].detection_prob, 0.995);
}

TEST(ScenarioSpec, Validation) {
  ScenarioSpec spec = build_scenario1();
  spec.clutter_mean = 0.0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.assumed_clutter_mean = 0.5;
  EXPECT_NO_THROW(spec.validate());
  spec.dt = -1.0;
  try {
    spec.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "scenario.dt");
  }
}

TEST(UniformInDisk, StaysInsideAndCoversArea) {
  Rng rng(5);
  int inner = 0;
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    const auto p = uniform_in_disk(100.0, rng);
    ASSERT_LE(p.norm(), 100.0);
    if (p.norm() < 50.0) ++inner;
  }
  EXPECT_NEAR(inner / static_cast<double>(draws), 0.25, 0.015);
}

TEST(BirthSampler, EmptyPreviousIsUniform) {
  BirthSampler s({}, 10.0);
  Rng rng(6);
  EXPECT_FALSE(s.seed_for(Measurement(1, 1)).has_value());
  const auto x = s.sample(Measurement(1, 1), 2000, rng);
  double far = 0.0;
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    const double r = std::hypot(x(0, l), x(2, l));
    ASSERT_LE(r, 5000.0);
    far = std::max(far, r);
    EXPECT_LE(std::abs(x(1, l)), 30.0);
  }
  EXPECT_GT(far, 4000.0);
}

TEST(BirthSampler, SeedsFromNearestPrevious) {
  const std::vector<Measurement> prev = {Measurement(0, 0), Measurement(1000, 0)};
  BirthSampler s(prev, 10.0);
  EXPECT_EQ(*s.seed_for(Measurement(990, 10)), 1u);
  Rng rng(7);
  const auto x = s.sample(Measurement(990, 10), 5000, rng);
  const double mx = x.row(0).mean();
  const double my = x.row(2).mean();
  EXPECT_NEAR(mx, 1000.0, 1.0);
  EXPECT_NEAR(my, 0.0, 1.0);
  const double var = (x.row(0).array() - mx).square().mean();
  EXPECT_NEAR(var, 400.0, 40.0);
}

TEST(BirthSampler, ClampsToRegion) {
  const std::vector<Measurement> prev = {Measurement(5000, 0)};
  BirthConfig cfg;
  cfg.inflation = 1e4;
  BirthSampler s(prev, 10.0, cfg);
  Rng rng(8);
  const auto x = s.sample(Measurement(5000, 0), 500, rng);
  for (Eigen::Index l = 0; l < x.cols(); ++l) EXPECT_LE(std::hypot(x(0, l), x(2, l)), 5000.0 + 1e-9);
}

}  // namespace
