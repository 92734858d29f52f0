#include <gtest/gtest.h>

#include <random>

#include "confplan/planner.hpp"
#include "oracles.hpp"

using namespace confplan;

namespace {

struct Instance {
  KeepOutSpec keepout;
  TrackingBound bound{0.1, 0.1, 0.0};
  OccupancyPrediction pred;
  PlanConfig cfg;
};

// Unit-cell arena where the planning lattice coincides with cell centers.
Instance unit_instance(int n, int T, double l) {
  Instance in;
  in.keepout.arena = Arena::from_cells(n, n, 1.0);
  in.keepout.human_box_side = l;
  in.pred = OccupancyPrediction(n, n, 1.0, T);
  in.cfg.robot_speed = 1.0;
  in.cfg.dt = 1.0;
  return in;
}

Vec3 at(int x, int y) { return {x + 0.5, y + 0.5, 1.0}; }

// Oracle's own view of the per-waypoint constraint.
std::function<bool(int, int, int)> allowed_fn(const Instance& in) {
  return [&in](int tau, int x, int y) {
    const auto& g = in.pred.grid_held(tau);
    const int n = in.pred.cols();
    const double half_w = (in.keepout.human_box_side + in.bound.ex) / 2;
    const double half_h = (in.keepout.human_box_side + in.bound.ey) / 2;
    double s = 0.0;
    for (int yy = 0; yy < in.pred.rows(); ++yy)
      for (int xx = 0; xx < n; ++xx)
        if (std::abs(xx - x) <= half_w && std::abs(yy - y) <= half_h)
          s += g[static_cast<std::size_t>(yy * n + xx)];
    return s <= in.cfg.p_threshold;
  };
}

void fill_random(OccupancyPrediction& p, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> cell(0, p.cols() * p.rows() - 1), count(1, 5);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int tau = 0; tau <= p.horizon(); ++tau) {
    auto& g = p.grid(tau);
    std::fill(g.begin(), g.end(), 0.0);
    const int k = count(rng);
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += (g[static_cast<std::size_t>(cell(rng))] += w(rng));
    for (int i = 0; i < 3; ++i) z += (g[static_cast<std::size_t>(cell(rng))] += 0.004 * w(rng));
    for (auto& v : g) v /= z;
  }
}

void expect_dynamics(const PlannedTrajectory& t, double step) {
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const Vec3 d = t.waypoints[i + 1].position - t.waypoints[i].position;
    const double sx = d.x / step, sy = d.y / step;
    EXPECT_NEAR(sx, std::round(sx), 1e-9);
    EXPECT_NEAR(sy, std::round(sy), 1e-9);
    EXPECT_LE(std::abs(std::round(sx)), 1.0);
    EXPECT_LE(std::abs(std::round(sy)), 1.0);
    EXPECT_EQ(d.z, 0.0);
  }
}

}  // namespace

TEST(Plan, EmptyRoomMatchesShortestPath) {
  auto in = unit_instance(12, 5, 0.3);
  in.cfg.goal = at(9, 4);
  const auto t = plan(at(1, 10), in.pred, in.cfg, in.keepout, in.bound);
  EXPECT_TRUE(t.reached_goal);
  EXPECT_NEAR(t.total_cost, oracle::grid_shortest_path(1, 10, 9, 4, 12, 12, 0.5), 1e-12);
  EXPECT_EQ(t.waypoints.front().position, at(1, 10));
  EXPECT_EQ(t.waypoints.back().position, at(9, 4));
  expect_dynamics(t, 1.0);
}

TEST(Plan, VacuousThresholdEqualsUnconstrained) {
  auto in = unit_instance(8, 6, 2.0);
  std::mt19937_64 rng(3);
  fill_random(in.pred, rng);
  in.cfg.goal = at(7, 7);
  in.cfg.p_threshold = 1.0;
  const auto constrained = plan(at(0, 0), in.pred, in.cfg, in.keepout, in.bound);
  auto empty = unit_instance(8, 6, 2.0);
  empty.cfg = in.cfg;
  const auto free = plan(at(0, 0), empty.pred, empty.cfg, empty.keepout, empty.bound);
  EXPECT_EQ(constrained.total_cost, free.total_cost);
  ASSERT_EQ(constrained.size(), free.size());
  for (std::size_t i = 0; i < free.size(); ++i)
    EXPECT_EQ(constrained.waypoints[i].position, free.waypoints[i].position);
}

TEST(Plan, DetoursAroundParkedHuman) {
  auto in = unit_instance(7, 9, 0.3);
  for (int tau = 0; tau <= 9; ++tau) in.pred.grid(tau)[in.keepout.arena.index({3, 3})] = 1.0;
  in.cfg.goal = at(6, 3);
  in.cfg.max_steps = 9;
  const auto t = plan(at(0, 3), in.pred, in.cfg, in.keepout, in.bound);
  ASSERT_TRUE(t.reached_goal);
  for (const auto& w : t.waypoints) EXPECT_FALSE(w.position == at(3, 3));
  const double ref = oracle::constrained_optimum_dfs(0, 3, 6, 3, 9, 7, 7, 0.5, allowed_fn(in));
  EXPECT_NEAR(t.total_cost, ref, 1e-12);
  EXPECT_GT(t.total_cost, oracle::grid_shortest_path(0, 3, 6, 3, 7, 7, 0.5));
}

TEST(Plan, OptimalAndSafeOnRandomFields) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 15; ++rep) {
    const int n = 5 + rep % 4;
    const int T = 6 + rep % 5;
    auto in = unit_instance(n, T, 2.0);
    fill_random(in.pred, rng);
    in.cfg.max_steps = T;
    in.cfg.fallback = false;
    std::uniform_int_distribution<int> c(0, n - 1);
    const int sx = c(rng), sy = c(rng), gx = c(rng), gy = c(rng);
    in.cfg.goal = at(gx, gy);
    const double ref = oracle::constrained_optimum(sx, sy, gx, gy, T, n, n, 0.5, allowed_fn(in));
    if (!std::isfinite(ref)) {
      EXPECT_THROW(plan(at(sx, sy), in.pred, in.cfg, in.keepout, in.bound), PlanError);
      continue;
    }
    const auto t = plan(at(sx, sy), in.pred, in.cfg, in.keepout, in.bound);
    EXPECT_NEAR(t.total_cost, ref, 1e-9) << "rep " << rep;
    EXPECT_LE(trajectory_collision_prob(t, in.pred, in.keepout, in.bound), in.cfg.p_threshold);
    expect_dynamics(t, 1.0);
  }
}

TEST(Oracles, DynamicProgrammingAgreesWithEnumeration) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    auto in = unit_instance(4, 5, 2.0);
    fill_random(in.pred, rng);
    std::uniform_int_distribution<int> c(0, 3);
    const int sx = c(rng), sy = c(rng), gx = c(rng), gy = c(rng);
    EXPECT_EQ(oracle::constrained_optimum(sx, sy, gx, gy, 5, 4, 4, 0.5, allowed_fn(in)),
              oracle::constrained_optimum_dfs(sx, sy, gx, gy, 5, 4, 4, 0.5, allowed_fn(in)));
  }
}

TEST(Plan, Errors) {
  auto in = unit_instance(5, 4, 0.3);
  for (int tau = 0; tau <= 4; ++tau) in.pred.grid(tau)[in.keepout.arena.index({0, 0})] = 1.0;
  in.cfg.goal = at(4, 4);
  try {
    plan(at(0, 0), in.pred, in.cfg, in.keepout, in.bound);
    FAIL();
  } catch (const PlanError& e) {
    EXPECT_STREQ(e.what(), "infeasible start");
  }
  in.cfg.p_threshold = 0.0;
  EXPECT_THROW(plan(at(0, 0), in.pred, in.cfg, in.keepout, in.bound), PlanError);

  // Goal permanently occupied: no plan without fallback; fallback gets close.
  auto blocked = unit_instance(5, 4, 0.3);
  for (int tau = 0; tau <= 4; ++tau) blocked.pred.grid(tau)[blocked.keepout.arena.index({4, 4})] = 1.0;
  blocked.cfg.goal = at(4, 4);
  blocked.cfg.fallback = false;
  try {
    plan(at(0, 0), blocked.pred, blocked.cfg, blocked.keepout, blocked.bound);
    FAIL();
  } catch (const PlanError& e) {
    EXPECT_STREQ(e.what(), "no safe plan");
  }
  blocked.cfg.fallback = true;
  const auto fb = plan(at(0, 0), blocked.pred, blocked.cfg, blocked.keepout, blocked.bound);
  EXPECT_FALSE(fb.reached_goal);
  const Vec3 end = fb.waypoints.back().position;
  EXPECT_NEAR((end - at(4, 4)).norm(), 1.0, 1e-12);
}

TEST(Plan, UnsafeStartAllowedWhenRequested) {
  auto in = unit_instance(5, 4, 0.3);
  in.pred.grid(0)[in.keepout.arena.index({0, 0})] = 1.0;
  for (int tau = 1; tau <= 4; ++tau) in.pred.grid(tau)[in.keepout.arena.index({4, 0})] = 1.0;
  in.cfg.goal = at(0, 4);
  in.cfg.allow_unsafe_start = true;
  const auto t = plan(at(0, 0), in.pred, in.cfg, in.keepout, in.bound);
  EXPECT_TRUE(t.reached_goal);
  EXPECT_EQ(t.waypoints.front().pcoll, 1.0);
}

TEST(Plan, RealisticArenaIsDeterministicAndSafe) {
  HumanModel m;
  m.goals = {{3.2, 1.83}};
  KeepOutSpec k;
  const ConfidenceBelief b(BetaGrid(), 1, 0.02);
  const auto pred = propagate(k.arena.snap({0.5, 1.83}), b, m, 20);
  PlanConfig cfg;
  cfg.goal = {1.83, 3.3, 1.0};
  const auto t1 = plan({1.83, 0.4, 1.0}, pred, cfg, k, TrackingBound{});
  const auto t2 = plan({1.83, 0.4, 1.0}, pred, cfg, k, TrackingBound{});
  ASSERT_EQ(t1.size(), t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_EQ(t1.waypoints[i].position, t2.waypoints[i].position);
  EXPECT_TRUE(t1.reached_goal);
  EXPECT_LE(t1.max_pcoll(), cfg.p_threshold);
  EXPECT_LE(trajectory_collision_prob(t1, pred, k, TrackingBound{}, true), cfg.p_threshold);
  expect_dynamics(t1, cfg.robot_speed * pred.dt());
}

TEST(ReplanNeeded, Examples) {
  auto in = unit_instance(6, 4, 0.3);
  in.cfg.goal = at(5, 0);
  const auto t = plan(at(0, 0), in.pred, in.cfg, in.keepout, in.bound);
  EXPECT_FALSE(replan_needed(t, in.pred, 0.0, in.cfg, in.keepout, in.bound));

  auto moved = in.pred;
  moved.grid(3)[in.keepout.arena.index({3, 0})] = 0.5;
  moved.grid(3)[in.keepout.arena.index({0, 5})] = 0.5;
  EXPECT_TRUE(replan_needed(t, moved, 0.0, in.cfg, in.keepout, in.bound));

  auto edge = in.pred;
  edge.grid(3)[in.keepout.arena.index({3, 0})] = in.cfg.p_threshold;
  edge.grid(3)[in.keepout.arena.index({0, 5})] = 1.0 - in.cfg.p_threshold;
  EXPECT_FALSE(replan_needed(t, edge, 0.0, in.cfg, in.keepout, in.bound));
}
