#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "confplan/sim.hpp"

using namespace confplan;

namespace {

Scenario spill_scenario(std::uint64_t seed = 0) {
  Scenario sc;
  sc.name = "spill";
  sc.trajectory_kind = TrajectoryKind::SpillDetour;
  sc.trajectory_seed = seed;
  return sc;
}

HumanTrajectory parked(Vec2 p, double duration) {
  HumanTrajectory t;
  t.samples = {{0.0, p}, {duration, p}};
  return t;
}

// Mean beta logged at the last human step at or before t.
double beta_at(const RunMetrics& m, double t) {
  double v = m.human_steps.front().mean_beta;
  for (const auto& h : m.human_steps)
    if (h.t <= t + 1e-9) v = h.mean_beta;
  return v;
}

}  // namespace

TEST(GenerateTrajectory, DirectDurationFollowsSpeed) {
  TrajectoryParams p;
  p.start = {0.4, 1.83};
  p.goal = {3.4, 1.83};
  p.jitter_position = 0.0;
  p.jitter_speed = 0.0;
  const auto t = generate_trajectory(TrajectoryKind::Direct, p, 7);
  EXPECT_NEAR(t.duration(), 3.0, 1e-12);
  EXPECT_EQ(t.samples.front().p, p.start);
  EXPECT_NEAR((t.samples.back().p - p.goal).norm(), 0.0, 1e-12);
  EXPECT_NEAR(t.events.at("arrival"), 3.0, 1e-12);
  const Vec2 mid = t.position_at(1.5);
  EXPECT_NEAR(mid.x, 1.9, 1e-9);
  EXPECT_NEAR(mid.y, 1.83, 1e-12);
}

TEST(GenerateTrajectory, TriangleClosesLoop) {
  TrajectoryParams p;
  p.jitter_position = 0.0;
  p.jitter_speed = 0.0;
  const auto t = generate_trajectory(TrajectoryKind::Triangle, p, 0);
  EXPECT_NEAR((t.samples.back().p - p.start).norm(), 0.0, 1e-12);
  const double perimeter = (p.goal - p.start).norm() + (p.goal2 - p.goal).norm() + (p.start - p.goal2).norm();
  EXPECT_NEAR(t.duration(), perimeter / p.speed, 1e-12);
}

TEST(GenerateTrajectory, SpillDetourStaysOutsideDisk) {
  TrajectoryParams p;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto t = generate_trajectory(TrajectoryKind::SpillDetour, p, seed);
    for (const auto& s : t.samples) EXPECT_GT((s.p - p.spill_center).norm(), p.spill_radius) << seed;
    EXPECT_LT(t.events.at("detour_start"), t.events.at("detour_mid"));
    EXPECT_LT(t.events.at("detour_mid"), t.events.at("detour_end"));
    EXPECT_LT(t.events.at("detour_end"), t.events.at("arrival"));
  }
}

TEST(GenerateTrajectory, SeedChangesJitterOnly) {
  TrajectoryParams p;
  const auto a = generate_trajectory(TrajectoryKind::Direct, p, 1);
  const auto b = generate_trajectory(TrajectoryKind::Direct, p, 1);
  const auto c = generate_trajectory(TrajectoryKind::Direct, p, 2);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].p, b.samples[i].p);
  EXPECT_NE(a.samples.front().p, c.samples.front().p);
  EXPECT_LE(std::abs(a.samples.front().p.y - p.start.y), p.jitter_position);
}

TEST(HumanTrajectoryCsv, RoundTripIsExact) {
  const auto t = generate_trajectory(TrajectoryKind::SpillDetour, TrajectoryParams{}, 3);
  std::stringstream ss;
  write_human_trajectory(ss, t);
  const auto back = read_human_trajectory(ss);
  ASSERT_EQ(back.samples.size(), t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].t, t.samples[i].t);
    EXPECT_EQ(back.samples[i].p, t.samples[i].p);
  }
}

TEST(HumanTrajectoryCsv, RejectsMalformedInput) {
  std::istringstream backwards("t,x,y\n0,1,1\n1,1,1\n0.5,1,1\n");
  EXPECT_THROW(read_human_trajectory(backwards), ConfigError);
  std::istringstream short_row("0,1\n");
  EXPECT_THROW(read_human_trajectory(short_row), ConfigError);
  std::istringstream empty("t,x,y\n");
  EXPECT_THROW(read_human_trajectory(empty), ConfigError);
  std::istringstream ok("# comment\n0,1,2\n\n1,1.5,2\n");
  EXPECT_EQ(read_human_trajectory(ok).samples.size(), 2u);
}

TEST(HumanTrajectory, PositionInterpolatesAndClamps) {
  HumanTrajectory t;
  t.samples = {{0.0, {0.0, 0.0}}, {2.0, {2.0, 4.0}}};
  EXPECT_EQ(t.position_at(-1.0), (Vec2{0.0, 0.0}));
  EXPECT_EQ(t.position_at(1.0), (Vec2{1.0, 2.0}));
  EXPECT_EQ(t.position_at(5.0), (Vec2{2.0, 4.0}));
}

TEST(SteppedSource, AppliesQueuedMoveOnce) {
  const Arena arena = Arena::from_cells(4, 4, 1.0);
  SteppedSource s(arena, {0, 0});
  EXPECT_THROW(s.queue(Action::W), Error);
  EXPECT_FALSE(s.pending());
  s.queue(Action::NE);
  EXPECT_EQ(s.cell(), (Cell{0, 0}));
  EXPECT_EQ(s.observe(0.0), arena.center({1, 1}));
  EXPECT_EQ(s.observe(1.0), arena.center({1, 1}));
  EXPECT_THROW(SteppedSource(arena, {4, 0}), ConfigError);
}

TEST(Engine, RunsAreDeterministic) {
  const Scenario sc = spill_scenario(4);
  const auto a = run(sc);
  const auto b = run(sc);
  EXPECT_EQ(a.min_ground_distance, b.min_ground_distance);
  EXPECT_EQ(a.completion_time, b.completion_time);
  EXPECT_EQ(a.final_beta_marginal, b.final_beta_marginal);
  EXPECT_EQ(a.max_tracking_error.x, b.max_tracking_error.x);
  EXPECT_EQ(a.max_tracking_error.y, b.max_tracking_error.y);
  ASSERT_EQ(a.cycles.size(), b.cycles.size());
  for (std::size_t i = 0; i < a.cycles.size(); ++i) EXPECT_EQ(a.cycles[i].plan_cost, b.cycles[i].plan_cost);
}

TEST(Engine, ParkedHumanLeavesDirectRoute) {
  Scenario sc;
  sc.robot_start = {0.5, 0.6, 1.0};
  sc.robot_goal = {0.5, 3.0, 1.0};
  const Vec2 corner{3.45, 0.25};
  sc.model.goals = {corner};
  const auto m = run(sc, parked(corner, 1.0));
  ASSERT_FALSE(m.timed_out);
  EXPECT_FALSE(m.collision_occurred);
  const double separation = (corner - sc.robot_start.xy()).norm();
  EXPECT_NEAR(m.min_ground_distance, separation, sc.model.arena.cell_size());
  // Straight lattice path: per-axis speed v_R, so time = distance / v_R.
  const double unconstrained = (sc.robot_goal - sc.robot_start).norm() / sc.planner.robot_speed;
  EXPECT_NEAR(m.completion_time, unconstrained, 1.0 / sc.replan_hz);
  EXPECT_EQ(m.tracking_violations, 0);
  EXPECT_TRUE(m.plans_certified);
}

TEST(Engine, TrackingStaysWithinBound) {
  for (const auto kind : {TrajectoryKind::Direct, TrajectoryKind::SpillDetour}) {
    Scenario sc;
    sc.trajectory_kind = kind;
    const auto m = run(sc);
    EXPECT_EQ(m.tracking_violations, 0) << to_string(kind);
    EXPECT_LE(m.max_tracking_error.x, sc.bound.ex / 2);
    EXPECT_LE(m.max_tracking_error.y, sc.bound.ey / 2);
    EXPECT_LE(m.max_tracking_error.z, sc.bound.ez / 2);
  }
}

TEST(Engine, ConfidentModelComesCloserOnSpill) {
  Scenario nominal = spill_scenario(0);
  nominal.trajectory.jitter_position = 0.0;
  nominal.trajectory.jitter_speed = 0.0;
  const auto inferred = run(nominal);
  nominal.method = Method::fixed(10.0);
  const auto fixed = run(nominal);
  EXPECT_LE(fixed.min_ground_distance, inferred.min_ground_distance);
  EXPECT_FALSE(inferred.collision_occurred);
}

TEST(Engine, BetaDropsDuringDetourAndRecovers) {
  const Scenario sc = spill_scenario(0);
  const auto traj = scenario_trajectory(sc);
  const auto m = run(sc, traj);
  const double pre = beta_at(m, traj.events.at("detour_start"));
  const double mid = beta_at(m, traj.events.at("detour_mid"));
  EXPECT_LE(mid, pre / 2);
  double after = 0.0;
  for (const auto& h : m.human_steps)
    if (h.t >= traj.events.at("detour_end")) after = std::max(after, h.mean_beta);
  EXPECT_GE(after, 0.75 * pre);
}

TEST(Engine, CyclesFollowReplanRate) {
  const Scenario sc = spill_scenario(1);
  Engine e(sc, std::make_unique<ReplaySource>(scenario_trajectory(sc)));
  EXPECT_EQ(e.ticks_per_replan(), 50);
  e.step_cycle();
  EXPECT_EQ(e.metrics().cycles.size(), 1u);
  EXPECT_EQ(e.tick_index(), 1);
  e.step_cycle();
  EXPECT_EQ(e.metrics().cycles.size(), 2u);
  EXPECT_NEAR(e.metrics().cycles.back().t, 0.5, 1e-12);
  EXPECT_TRUE(e.prediction());
  EXPECT_EQ(e.prediction()->horizon(), sc.horizon);
}

TEST(Engine, PredictionDtFollowsSpeedEstimate) {
  Scenario sc;
  sc.trajectory.jitter_position = 0.0;
  sc.trajectory.jitter_speed = 0.0;
  sc.trajectory.speed = 1.5;
  Engine e(sc, std::make_unique<ReplaySource>(scenario_trajectory(sc)));
  e.step_human_ticks(12);
  EXPECT_NEAR(e.prediction_dt(), sc.model.arena.cell_size() / 1.5, 1e-9);
  sc.use_speed_estimate = false;
  Engine nominal(sc, std::make_unique<ReplaySource>(scenario_trajectory(sc)));
  nominal.step_human_ticks(12);
  EXPECT_EQ(nominal.prediction_dt(), sc.model.arena.cell_size() / sc.model.speed);
}

TEST(Engine, TimeoutIsReported) {
  Scenario sc;
  sc.timeout = 1.0;
  const auto m = run(sc);
  EXPECT_TRUE(m.timed_out);
  EXPECT_EQ(m.completion_time, 1.0);
}

TEST(Quantile, MatchesHandComputedValues) {
  EXPECT_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25), 2.0);
  EXPECT_EQ(quantile({7.0}, 0.75), 7.0);
  EXPECT_THROW(quantile({}, 0.5), Error);
}

TEST(CompareMethods, ShapesAndSelfComparison) {
  Scenario sc;
  std::vector<NamedTrajectory> trajs;
  for (std::uint64_t s = 0; s < 3; ++s)
    trajs.push_back({"direct_" + std::to_string(s), generate_trajectory(TrajectoryKind::Direct, sc.trajectory, s)});
  const std::vector<Method> methods = {Method::inferred(), Method::fixed(10.0), Method::fixed(0.05)};
  const auto table = compare_methods(sc, methods, trajs, 3);
  ASSERT_EQ(table.rows.size(), methods.size() * trajs.size());
  ASSERT_EQ(table.aggregates.size(), methods.size());
  for (const auto& r : table.rows) EXPECT_FALSE(r.metrics.collision_occurred) << r.method << ' ' << r.trajectory;
  EXPECT_EQ(table.aggregates[0].time_difference.q1, 0.0);
  EXPECT_EQ(table.aggregates[0].time_difference.q3, 0.0);
  EXPECT_EQ(table.rows[3].method, "fixed:10");
  EXPECT_EQ(table.rows[3].trajectory, "direct_0");

  const auto serial = compare_methods(sc, methods, trajs, 1);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    EXPECT_EQ(serial.rows[i].metrics.completion_time, table.rows[i].metrics.completion_time);
}

TEST(CompareMethods, RejectsEmptyInputs) {
  Scenario sc;
  EXPECT_THROW(compare_methods(sc, {}, {{"a", parked({1, 1}, 1)}}), ConfigError);
  EXPECT_THROW(compare_methods(sc, {Method::inferred()}, {}), ConfigError);
}
