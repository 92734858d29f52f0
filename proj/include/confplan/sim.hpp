#pragma once

// Closed-loop simulation: human trajectories (generated or replayed), the
// observe -> infer -> predict -> plan -> track loop, metrics, and batch
// comparison of confidence methods.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <mutex>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "confplan/scenario.hpp"

namespace confplan {

// ---------------------------------------------------------------------------
// Human trajectories

struct TrajectorySample {
  double t{0.0};
  Vec2 p;
};

struct HumanTrajectory {
  std::vector<TrajectorySample> samples;
  // Named instants, e.g. detour_start / detour_mid / detour_end.
  std::map<std::string, double> events;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }

  // Linear interpolation, clamped to the first and last sample.
  Vec2 position_at(double t) const {
    if (samples.empty()) throw Error("empty human trajectory");
    if (t <= samples.front().t) return samples.front().p;
    if (t >= samples.back().t) return samples.back().p;
    const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                     [](double v, const TrajectorySample& s) { return v < s.t; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    return a.p + w * (b.p - a.p);
  }
};

namespace detail {

// Constant-speed path made of straight segments and circular arcs.
class PathBuilder {
 public:
  explicit PathBuilder(Vec2 start) : cursor_(start) { pts_.push_back(start); }

  void line_to(Vec2 p, int resolution = 1) {
    const Vec2 a = cursor_;
    for (int i = 1; i <= resolution; ++i) add(a + (static_cast<double>(i) / resolution) * (p - a));
  }

  // Arc about `center` from the cursor, sweeping `sweep` radians (positive = CCW).
  void arc(Vec2 center, double sweep, int resolution = 256) {
    const Vec2 r0 = cursor_ - center;
    for (int i = 1; i <= resolution; ++i) {
      const double a = sweep * i / resolution;
      const double c = std::cos(a), s = std::sin(a);
      add(center + Vec2{c * r0.x - s * r0.y, s * r0.x + c * r0.y});
    }
  }

  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }

  Vec2 at_arclength(double s) const {
    if (cum_.empty() || s <= 0.0) return pts_.front();
    if (s >= cum_.back()) return pts_.back();
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    const double s0 = i == 0 ? 0.0 : cum_[i - 1];
    const double w = (s - s0) / (cum_[i] - s0);
    return pts_[i] + w * (pts_[i + 1] - pts_[i]);
  }

  HumanTrajectory sample(double speed, double rate, double hold) const {
    HumanTrajectory out;
    const double T = length() / speed;
    const auto n = static_cast<long>(std::floor(T * rate));
    for (long k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / rate;
      out.samples.push_back({t, at_arclength(t * speed)});
    }
    if (out.samples.back().t < T) out.samples.push_back({T, pts_.back()});
    if (hold > 0.0) out.samples.push_back({T + hold, pts_.back()});
    return out;
  }

 private:
  void add(Vec2 p) {
    const double d = (p - cursor_).norm();
    if (d == 0.0) return;
    cum_.push_back(length() + d);
    pts_.push_back(p);
    cursor_ = p;
  }

  Vec2 cursor_;
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

}  // namespace detail

// Synthetic human trajectory. The seed perturbs start/goal across the travel
// direction and the walking speed; zero jitter gives the nominal path.
inline HumanTrajectory generate_trajectory(TrajectoryKind kind, const TrajectoryParams& params,
                                           std::uint64_t seed) {
  if (!(params.speed > 0.0) || !(params.rate > 0.0))
    throw ConfigError("trajectory: speed and rate must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vec2 start = params.start, goal = params.goal;
  const Vec2 travel = goal - start;
  const double len = travel.norm();
  const Vec2 dir = len > 0.0 ? (1.0 / len) * travel : Vec2{1.0, 0.0};
  const Vec2 normal{-dir.y, dir.x};
  const double ds = params.jitter_position * U(rng);
  const double dg = params.jitter_position * U(rng);
  const double speed = params.speed * (1.0 + params.jitter_speed * U(rng));
  start = start + ds * normal;
  goal = goal + dg * normal;

  HumanTrajectory out;
  switch (kind) {
    case TrajectoryKind::Direct: {
      detail::PathBuilder pb(start);
      pb.line_to(goal);
      out = pb.sample(speed, params.rate, params.hold);
      break;
    }
    case TrajectoryKind::Triangle: {
      detail::PathBuilder pb(start);
      pb.line_to(goal);
      pb.line_to(params.goal2);
      pb.line_to(start);
      out = pb.sample(speed, params.rate, params.hold);
      break;
    }
    case TrajectoryKind::SpillDetour: {
      if (params.spill_radius <= 0.0 || params.detour_clearance < 0.0)
        throw ConfigError("trajectory: spill radius must be positive");
      if (params.detour_side != 1 && params.detour_side != -1)
        throw ConfigError("trajectory: detour side must be +1 or -1");
      const Vec2 d = goal - start;
      const double L = d.norm();
      if (L == 0.0) throw ConfigError("trajectory: spill detour needs start != goal");
      const Vec2 u = (1.0 / L) * d;
      const Vec2 rel = params.spill_center - start;
      const double s_c = rel.x * u.x + rel.y * u.y;
      const Vec2 foot = start + s_c * u;
      // Arc about the projection of the spill center onto the walking line,
      // wide enough to clear the disk wherever its center lies.
      const double R = params.spill_radius + params.detour_clearance + (params.spill_center - foot).norm();
      if (s_c - R <= 0.0 || s_c + R >= L)
        throw ConfigError("trajectory: spill must lie strictly between start and goal");
      detail::PathBuilder pb(start);
      pb.line_to(foot - R * u);
      // Sweeping -pi from the back side passes the left normal; +pi the right one.
      pb.arc(foot, params.detour_side > 0 ? -std::numbers::pi : std::numbers::pi);
      pb.line_to(goal);
      out = pb.sample(speed, params.rate, params.hold);
      const double arc = std::numbers::pi * R;
      out.events["detour_start"] = (s_c - R) / speed;
      out.events["detour_mid"] = (s_c - R + 0.5 * arc) / speed;
      out.events["detour_end"] = (s_c - R + arc) / speed;
      break;
    }
  }
  out.events["arrival"] = out.samples.back().t - params.hold;
  return out;
}

// "t,x,y" CSV (header optional). Times must be non-decreasing.
inline HumanTrajectory read_human_trajectory(std::istream& is) {
  HumanTrajectory out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": expected t,x,y");
    if (out.samples.empty() && f[0] == "t") continue;
    TrajectorySample s;
    try {
      s.t = parse_double(f[0]);
      s.p = {parse_double(f[1]), parse_double(f[2])};
    } catch (const ConfigError&) {
      throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": bad number");
    }
    if (!out.samples.empty() && s.t < out.samples.back().t)
      throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": time goes backwards");
    out.samples.push_back(s);
  }
  if (out.samples.empty()) throw ConfigError("trajectory csv: no samples");
  return out;
}

inline HumanTrajectory read_human_trajectory_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open trajectory file '" + path + "'");
  return read_human_trajectory(f);
}

inline void write_human_trajectory(std::ostream& os, const HumanTrajectory& traj) {
  os << "t,x,y\n";
  for (const auto& s : traj.samples)
    os << format_double(s.t) << ',' << format_double(s.p.x) << ',' << format_double(s.p.y) << '\n';
}

inline HumanTrajectory scenario_trajectory(const Scenario& sc) {
  if (sc.trajectory_file) return read_human_trajectory_file(*sc.trajectory_file);
  return generate_trajectory(sc.trajectory_kind, sc.trajectory, sc.trajectory_seed);
}

// ---------------------------------------------------------------------------
// Human sources driving the engine

class HumanSource {
 public:
  virtual ~HumanSource() = default;
  // Continuous ground position used for metrics.
  virtual Vec2 position(double t) const = 0;
  // Position observed at a human step; called once per step in time order.
  virtual Vec2 observe(double t) { return position(t); }
};

class ReplaySource final : public HumanSource {
 public:
  explicit ReplaySource(HumanTrajectory traj) : traj_(std::move(traj)) {}
  Vec2 position(double t) const override { return traj_.position_at(t); }
  const HumanTrajectory& trajectory() const { return traj_; }

 private:
  HumanTrajectory traj_;
};

// Grid-stepped human: each human step applies the queued action (stay when
// none was queued). Used by the live server.
class SteppedSource final : public HumanSource {
 public:
  SteppedSource(Arena arena, Cell start) : arena_(arena), cell_(start) {
    if (!arena_.contains(start)) throw ConfigError("human start outside arena");
  }

  Vec2 position(double) const override { return arena_.center(cell_); }

  Vec2 observe(double) override {
    if (pending_) cell_ = step_human(arena_, cell_, *pending_);
    pending_.reset();
    return arena_.center(cell_);
  }

  // Throws Error("infeasible action") without changing state.
  void queue(Action u) {
    if (!is_feasible(arena_, cell_, u)) throw Error("infeasible action");
    pending_ = u;
  }

  Cell cell() const { return cell_; }
  std::optional<Action> pending() const { return pending_; }

 private:
  Arena arena_;
  Cell cell_;
  std::optional<Action> pending_;
};

// ---------------------------------------------------------------------------
// Logs and metrics

struct CycleLog {
  double t{0.0};
  Cell human_cell;
  double mean_beta{0.0};
  std::vector<double> beta_marginal;
  std::vector<double> goal_marginal;
  double prediction_dt{0.0};
  double plan_cost{0.0};
  double plan_max_pcoll{0.0};
  bool plan_reached_goal{false};
  bool replan_flag{false};   // previous plan would have exceeded the threshold
  bool unsafe_start{false};  // plan began inside the current collision set
  bool plan_overrun{false};  // deadline missed, previous plan kept
};

struct HumanStepLog {
  double t{0.0};
  Cell cell;
  int observations{0};
  double mean_beta{0.0};
  double speed{0.0};
};

struct StateLog {
  double t{0.0};
  QuadState6 state;
  Vec3 reference;
};

struct RunMetrics {
  double min_ground_distance{std::numeric_limits<double>::infinity()};
  double completion_time{0.0};
  bool collision_occurred{false};
  bool timed_out{false};
  Vec3 max_tracking_error;
  long tracking_violations{0};  // control ticks with a per-axis error beyond E/2
  bool plans_certified{true};   // every plan's waypoint marginals within the threshold
  int replans{0};
  int plan_overruns{0};
  double final_mean_beta{0.0};
  std::vector<double> final_beta_marginal;
  std::vector<double> final_goal_marginal;
  std::vector<CycleLog> cycles;
  std::vector<HumanStepLog> human_steps;
  std::vector<StateLog> states;  // filled only when requested
};

struct EngineOptions {
  bool record_states{false};
  // Wall-clock planning deadline; on overrun the previous plan is kept.
  std::optional<std::chrono::milliseconds> plan_deadline;
};

// ---------------------------------------------------------------------------
// Engine

class Engine {
 public:
  Engine(Scenario sc, std::unique_ptr<HumanSource> human, EngineOptions opt = {})
      : sc_(std::move(sc)), human_(std::move(human)), opt_(opt),
        belief_(make_belief(sc_)), speed_(sc_.model.speed, sc_.speed_window) {
    sc_.validate();
    if (!human_) throw ConfigError("engine: no human source");
    pred_model_ = sc_.model;
    if (sc_.inference == InferenceMode::Bootstrapped)
      pred_model_.goals = {sc_.model.goals[sc_.theta_bar]};
    dt_ctrl_ = 1.0 / sc_.control_hz;
    dt_human_ = sc_.model.step_period();
    replan_every_ = std::max<long>(1, std::lround(sc_.control_hz / sc_.replan_hz));
    robot_.position = sc_.robot_start;
    reference_ = sc_.robot_start;
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  ~Engine() {
    for (auto& f : abandoned_) f.wait();
  }

  const Scenario& scenario() const { return sc_; }
  double time() const { return static_cast<double>(tick_) * dt_ctrl_; }
  long tick_index() const { return tick_; }
  bool finished() const { return finished_; }
  const ConfidenceBelief& belief() const { return belief_; }
  const HumanModel& prediction_model() const { return pred_model_; }
  const std::optional<OccupancyPrediction>& prediction() const { return prediction_; }
  const PlannedTrajectory& current_plan() const { return plan_; }
  const QuadState6& robot() const { return robot_; }
  Vec3 reference() const { return reference_; }
  Cell human_cell() const { return cell_; }
  long human_steps_taken() const { return next_human_; }
  const RunMetrics& metrics() const { return metrics_; }
  HumanSource& human() { return *human_; }
  double human_step_period() const { return dt_human_; }
  double control_period() const { return dt_ctrl_; }
  long ticks_per_replan() const { return replan_every_; }

  // Seconds per predicted human step, from the clamped speed estimate.
  double prediction_dt() const {
    const double v = sc_.use_speed_estimate ? speed_.value() : sc_.model.speed;
    return sc_.model.arena.cell_size() / std::clamp(v, sc_.speed_min, sc_.speed_max);
  }

  // One control tick. Returns true when this tick ran a planning cycle.
  bool step() {
    if (finished_) return false;
    const double t = time();
    while (static_cast<double>(next_human_) * dt_human_ <= t + 1e-9) {
      human_step(static_cast<double>(next_human_) * dt_human_);
      ++next_human_;
    }
    const bool planned = tick_ % replan_every_ == 0;
    if (planned) replan(t);

    reference_ = plan_.position_at(t);
    const Vec3 ref_vel = plan_.velocity_at(t);
    record(t);
    if (finished_) return planned;

    const QuadControl u = track(robot_, reference_, ref_vel, sc_.gains, sc_.limits);
    robot_ = step_quad(robot_, u, dt_ctrl_, sc_.limits, sc_.integrator);
    ++tick_;
    return planned;
  }

  // Runs until the next planning cycle has executed (or the run ends).
  void step_cycle() {
    while (!finished_) {
      if (step()) return;
    }
  }

  // Runs until `n` more human steps have been processed (or the run ends).
  void step_human_ticks(long n) {
    const long target = next_human_ + n;
    while (!finished_ && next_human_ < target) step();
  }

  const RunMetrics& run_to_end() {
    while (!finished_) step();
    return metrics_;
  }

 private:
  static ConfidenceBelief make_belief(const Scenario& sc) {
    const BetaGrid betas = sc.method.infer ? BetaGrid(sc.beta_grid) : BetaGrid::fixed(sc.method.fixed_beta);
    const std::size_t goals = sc.inference == InferenceMode::Bootstrapped ? 1 : sc.model.num_goals();
    return ConfidenceBelief(betas, goals, sc.smoothing_eps);
  }

  void observe_action(Cell x, Action u) {
    if (sc_.inference == InferenceMode::Bootstrapped)
      belief_ = bootstrapped_update(belief_, sc_.theta_bar, x, u, sc_.model);
    else
      belief_ = measurement_update(belief_, x, u, sc_.model);
    belief_ = time_update(belief_);
  }

  void human_step(double t) {
    const Vec2 p = human_->observe(t);
    HumanStepLog log;
    log.t = t;
    if (!have_human_) {
      cell_ = sc_.model.arena.snap(p);
      have_human_ = true;
    } else {
      speed_ = update_speed(speed_, (p - last_human_).norm(), dt_human_);
      const Cell next = sc_.model.arena.snap(p, &cell_);
      const auto path = unit_path(cell_, next);
      if (path.empty()) {
        observe_action(cell_, Action::Stay);
        log.observations = 1;
      }
      for (const Cell c : path) {
        observe_action(cell_, infer_action(cell_, c));
        cell_ = c;
        ++log.observations;
      }
    }
    last_human_ = p;
    log.cell = cell_;
    log.mean_beta = belief_.mean_beta();
    log.speed = speed_.value();
    metrics_.human_steps.push_back(log);
  }

  void replan(double t) {
    CycleLog log;
    log.t = t;
    log.human_cell = cell_;
    log.mean_beta = belief_.mean_beta();
    const auto m = marginals(belief_);
    log.beta_marginal = m.beta;
    log.goal_marginal = m.goal;
    log.prediction_dt = prediction_dt();

    auto pred = propagate(cell_, belief_, pred_model_, sc_.horizon, log.prediction_dt, sc_.prediction);
    PlanConfig cfg = sc_.planner;
    cfg.goal = sc_.robot_goal;
    cfg.allow_unsafe_start = true;
    if (!plan_.empty()) log.replan_flag = replan_needed(plan_, pred, t, cfg, sc_.keepout, sc_.bound);
    const Vec3 start = plan_.empty() ? sc_.robot_start : plan_.position_at(t);

    std::optional<PlannedTrajectory> fresh;
    if (opt_.plan_deadline) {
      reap_abandoned();
      auto fut = std::async(std::launch::async, [pred, cfg, start, t, ko = sc_.keepout, b = sc_.bound]() {
        return plan(start, pred, cfg, ko, b, t);
      });
      if (fut.wait_for(*opt_.plan_deadline) == std::future_status::ready)
        fresh = fut.get();
      else
        abandoned_.push_back(std::move(fut));
    } else {
      fresh = plan(start, pred, cfg, sc_.keepout, sc_.bound, t);
    }

    if (fresh) {
      plan_ = std::move(*fresh);
      log.unsafe_start = plan_.waypoints.front().pcoll > cfg.p_threshold;
      const double worst = tail_max_pcoll(plan_);
      if (worst > cfg.p_threshold) metrics_.plans_certified = false;
    } else {
      log.plan_overrun = true;
      ++metrics_.plan_overruns;
      if (plan_.empty()) plan_ = hold_plan(start, t);
    }
    log.plan_cost = plan_.total_cost;
    log.plan_max_pcoll = plan_.max_pcoll();
    log.plan_reached_goal = plan_.reached_goal;
    prediction_ = std::move(pred);
    ++metrics_.replans;
    metrics_.cycles.push_back(std::move(log));
  }

  // Max marginal after the start waypoint (the start is where the robot
  // already is, so only the remainder is a planning decision).
  static double tail_max_pcoll(const PlannedTrajectory& p) {
    double m = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) m = std::max(m, p.waypoints[i].pcoll);
    return m;
  }

  static PlannedTrajectory hold_plan(const Vec3& at, double t) {
    PlannedTrajectory p;
    p.waypoints.push_back({t, at, {}, 0.0});
    return p;
  }

  void reap_abandoned() {
    std::erase_if(abandoned_, [](std::future<PlannedTrajectory>& f) {
      return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
    });
  }

  void record(double t) {
    const Vec2 h = human_->position(t);
    const Vec2 r = robot_.position.xy();
    metrics_.min_ground_distance = std::min(metrics_.min_ground_distance, (h - r).norm());
    const double half = 0.5 * sc_.keepout.human_box_side;
    if (std::abs(h.x - r.x) <= half && std::abs(h.y - r.y) <= half) metrics_.collision_occurred = true;

    const Vec3 e = robot_.position - reference_;
    auto& me = metrics_.max_tracking_error;
    me = {std::max(me.x, std::abs(e.x)), std::max(me.y, std::abs(e.y)), std::max(me.z, std::abs(e.z))};
    if (std::abs(e.x) > 0.5 * sc_.bound.ex || std::abs(e.y) > 0.5 * sc_.bound.ey ||
        std::abs(e.z) > 0.5 * sc_.bound.ez)
      ++metrics_.tracking_violations;
    if (opt_.record_states) metrics_.states.push_back({t, robot_, reference_});

    const Vec2 g = sc_.robot_goal.xy();
    if (plan_.reached_goal && (r - g).norm() <= sc_.goal_tolerance) {
      finish(t, false);
    } else if (t >= sc_.timeout) {
      finish(sc_.timeout, true);
    }
  }

  void finish(double t, bool timeout) {
    finished_ = true;
    metrics_.completion_time = t;
    metrics_.timed_out = timeout;
    metrics_.final_mean_beta = belief_.mean_beta();
    const auto m = marginals(belief_);
    metrics_.final_beta_marginal = m.beta;
    metrics_.final_goal_marginal = m.goal;
  }

  Scenario sc_;
  std::unique_ptr<HumanSource> human_;
  EngineOptions opt_;
  HumanModel pred_model_;
  ConfidenceBelief belief_;
  SpeedEstimate speed_;

  double dt_ctrl_{0.01};
  double dt_human_{0.1};
  long replan_every_{50};
  long tick_{0};
  long next_human_{0};
  bool finished_{false};

  bool have_human_{false};
  Cell cell_;
  Vec2 last_human_;

  QuadState6 robot_;
  Vec3 reference_;
  PlannedTrajectory plan_;
  std::optional<OccupancyPrediction> prediction_;
  std::vector<std::future<PlannedTrajectory>> abandoned_;
  RunMetrics metrics_;
};

inline RunMetrics run(const Scenario& sc, const HumanTrajectory& traj, EngineOptions opt = {}) {
  Engine e(sc, std::make_unique<ReplaySource>(traj), opt);
  return e.run_to_end();
}

inline RunMetrics run(const Scenario& sc, EngineOptions opt = {}) {
  sc.validate();
  return run(sc, scenario_trajectory(sc), opt);
}

// ---------------------------------------------------------------------------
// Method comparison

struct Quartiles {
  double q1{0.0};
  double median{0.0};
  double q3{0.0};
};

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error("quantile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Quartiles quartiles(const std::vector<double>& v) {
  return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

struct NamedTrajectory {
  std::string label;
  HumanTrajectory trajectory;
};

struct ComparisonRow {
  std::string method;
  std::string trajectory;
  RunMetrics metrics;
};

struct MethodAggregate {
  std::string method;
  Quartiles min_distance;
  Quartiles completion_time;
  // Paired completion-time differences: reference method minus this method.
  Quartiles time_difference;
  int collisions{0};
  int timeouts{0};
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // method-major order
  std::vector<MethodAggregate> aggregates;
};

inline std::vector<MethodAggregate> aggregate(const std::vector<ComparisonRow>& rows,
                                              const std::vector<std::string>& methods) {
  std::vector<MethodAggregate> out;
  std::map<std::string, double> ref_time;
  for (const auto& r : rows)
    if (r.method == methods.front()) ref_time[r.trajectory] = r.metrics.completion_time;
  for (const auto& m : methods) {
    std::vector<double> dist, time, diff;
    MethodAggregate a;
    a.method = m;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      dist.push_back(r.metrics.min_ground_distance);
      time.push_back(r.metrics.completion_time);
      diff.push_back(ref_time.at(r.trajectory) - r.metrics.completion_time);
      a.collisions += r.metrics.collision_occurred ? 1 : 0;
      a.timeouts += r.metrics.timed_out ? 1 : 0;
    }
    if (dist.empty()) throw Error("no runs for method " + m);
    a.min_distance = quartiles(dist);
    a.completion_time = quartiles(time);
    a.time_difference = quartiles(diff);
    out.push_back(a);
  }
  return out;
}

// Runs every (method, trajectory) pair on up to `jobs` worker threads. The
// first method is the reference for paired time differences.
inline ComparisonTable compare_methods(const Scenario& base, const std::vector<Method>& methods,
                                       const std::vector<NamedTrajectory>& trajectories,
                                       unsigned jobs = 1) {
  if (methods.empty()) throw ConfigError("compare: need at least one method");
  if (trajectories.empty()) throw ConfigError("compare: need at least one trajectory");
  base.validate();
  ComparisonTable table;
  table.rows.resize(methods.size() * trajectories.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < table.rows.size(); i = next++) {
      const std::size_t mi = i / trajectories.size(), ti = i % trajectories.size();
      Scenario sc = base;
      sc.method = methods[mi];
      try {
        table.rows[i] = {methods[mi].label(), trajectories[ti].label, run(sc, trajectories[ti].trajectory)};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(table.rows.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> labels;
  for (const auto& m : methods) labels.push_back(m.label());
  table.aggregates = aggregate(table.rows, labels);
  return table;
}

}  // namespace confplan
