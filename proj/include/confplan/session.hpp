#pragma once

// One live session: a simulator whose human is driven by queued moves, plus
// the mapping between wire messages and engine operations. Transport-free so
// it can be exercised directly; ws_server.hpp puts it behind a websocket.

#include <algorithm>
#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "confplan/config.hpp"
#include "confplan/protocol.hpp"
#include "confplan/sim.hpp"

namespace confplan {

enum class SessionMode { Scripted, Realtime };

inline std::string to_string(SessionMode m) { return m == SessionMode::Scripted ? "scripted" : "realtime"; }

inline SessionMode parse_session_mode(const std::string& s) {
  if (s == "scripted") return SessionMode::Scripted;
  if (s == "realtime") return SessionMode::Realtime;
  throw ConfigError("unknown session mode '" + s + "' (scripted | realtime)");
}

struct SessionOptions {
  SessionMode mode{SessionMode::Realtime};
  double human_hz{4.0};        // realtime human ticks per wall-clock second
  int top_k{32};               // occupancy cells per prediction step (0 = all non-zero)
  bool plan_deadline{true};    // keep the previous plan when planning overruns one cycle

  void validate() const {
    if (!(human_hz > 0.0)) throw ConfigError("session: human_hz must be positive");
    if (top_k < 0) throw ConfigError("session: top_k must be >= 0");
  }
};

class Session {
 public:
  static constexpr int kMaxTickSteps = 100000;

  Session(Scenario base, SessionOptions opt) : base_(std::move(base)), opt_(opt) {
    opt_.validate();
    reset(base_);
  }

  SessionMode mode() const { return opt_.mode; }
  double human_hz() const { return opt_.human_hz; }
  const Engine& engine() const { return *engine_; }
  const Scenario& scenario() const { return engine_->scenario(); }
  Cell human_cell() const { return human_->cell(); }

  // Messages sent when a connection opens (and after each accepted config).
  std::vector<WireMessage> greeting() { return {hello(), state_update()}; }

  HelloMsg hello() const {
    const Scenario& sc = engine_->scenario();
    HelloMsg m;
    m.mode = to_string(opt_.mode);
    m.cols = sc.keepout.arena.cols();
    m.rows = sc.keepout.arena.rows();
    m.cell_size = sc.keepout.arena.cell_size();
    m.human_box_side = sc.keepout.human_box_side;
    m.human = human_->cell();
    m.robot = engine_->robot().position;
    m.robot_goal = sc.robot_goal;
    m.betas = engine_->belief().betas().values();
    m.goals = sc.model.goals;
    m.human_step_period = engine_->human_step_period();
    m.replan_period = 1.0 / sc.replan_hz;
    return m;
  }

  StateUpdateMsg state_update() {
    const Engine& e = *engine_;
    const Scenario& sc = e.scenario();
    StateUpdateMsg m;
    m.seq = seq_++;
    m.t = e.time();
    m.human = e.human_cell();
    m.human_position = human_->position(e.time());
    m.robot_position = e.robot().position;
    m.robot_velocity = e.robot().velocity;
    m.reference = e.reference();
    const auto marg = marginals(e.belief());
    m.betas = e.belief().betas().values();
    m.beta_marginal = marg.beta;
    m.goal_marginal = marg.goal;
    m.mean_beta = e.belief().mean_beta();
    if (const auto& pred = e.prediction()) {
      m.occupancy_dt = pred->dt();
      m.horizon = pred->horizon();
      m.occupancy = top_cells(*pred, opt_.top_k);
    }
    m.top_k = opt_.top_k;
    const auto& plan = e.current_plan();
    m.plan_reached_goal = plan.reached_goal;
    m.plan_cost = plan.total_cost;
    m.plan_overrun = !e.metrics().cycles.empty() && e.metrics().cycles.back().plan_overrun;
    const std::size_t limit = static_cast<std::size_t>(sc.horizon) + 1;
    for (const auto& w : plan.waypoints) {
      if (m.plan.size() == limit) break;
      m.plan.push_back({w.t, w.position, w.pcoll});
    }
    const auto& met = e.metrics();
    m.min_ground_distance = met.min_ground_distance;
    m.completion_time = e.finished() ? met.completion_time : e.time();
    m.collision_occurred = met.collision_occurred;
    m.finished = e.finished();
    m.timed_out = met.timed_out;
    return m;
  }

  // Largest cells per prediction step, ordered by probability then index.
  static std::vector<OccupancyCell> top_cells(const OccupancyPrediction& pred, int k) {
    std::vector<OccupancyCell> out;
    for (int tau = 0; tau <= pred.horizon(); ++tau) {
      const auto& g = pred.grid(tau);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] > 0.0) idx.push_back(i);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
      if (k > 0 && idx.size() > static_cast<std::size_t>(k)) idx.resize(static_cast<std::size_t>(k));
      for (const std::size_t i : idx)
        out.push_back({tau, static_cast<int>(i) / pred.cols(), static_cast<int>(i) % pred.cols(), g[i]});
    }
    return out;
  }

  std::vector<WireMessage> handle_text(std::string_view text) {
    try {
      return handle(parse_message(text));
    } catch (const ProtocolError& e) {
      return {ErrorMsg{e.what(), "parse"}};
    }
  }

  std::vector<WireMessage> handle(const WireMessage& in) {
    if (const auto* m = std::get_if<HumanMoveMsg>(&in)) return on_move(*m);
    if (const auto* m = std::get_if<TickMsg>(&in)) {
      if (opt_.mode != SessionMode::Scripted) return {ErrorMsg{"tick is only accepted in scripted mode", "tick"}};
      if (m->steps < 1 || m->steps > kMaxTickSteps) return {ErrorMsg{"tick steps out of range", "tick"}};
      return advance(m->steps);
    }
    if (const auto* m = std::get_if<ConfigMsg>(&in)) return on_config(*m);
    if (std::holds_alternative<HelloMsg>(in)) return {hello()};
    return {ErrorMsg{std::string("unexpected message type '") + message_type(in) + "'", message_type(in)}};
  }

  // Realtime timer callback: one human step.
  std::vector<WireMessage> human_tick() { return advance(1); }

 private:
  void reset(const Scenario& sc) {
    sc.validate();
    auto source = std::make_unique<SteppedSource>(sc.model.arena, sc.model.arena.snap(sc.trajectory.start));
    SteppedSource* raw = source.get();
    EngineOptions eo;
    if (opt_.plan_deadline)
      eo.plan_deadline = std::chrono::milliseconds(std::max<long>(1, std::lround(1000.0 / sc.replan_hz)));
    auto engine = std::make_unique<Engine>(sc, std::move(source), eo);
    engine->step();  // initial observation and first plan
    engine_ = std::move(engine);
    human_ = raw;
    seq_ = 0;
  }

  std::vector<WireMessage> on_move(const HumanMoveMsg& m) {
    if (std::abs(m.dx) > 1 || std::abs(m.dy) > 1) return {ErrorMsg{"move must be a single grid step", "human_move"}};
    try {
      human_->queue(action_from_displacement(m.dx, m.dy));
    } catch (const Error&) {
      return {ErrorMsg{"move leaves the arena", "human_move"}};
    }
    return {AckMsg{"human_move"}};
  }

  std::vector<WireMessage> on_config(const ConfigMsg& m) {
    try {
      SessionOptions opt = opt_;
      if (m.mode) opt.mode = parse_session_mode(*m.mode);
      if (m.human_hz) opt.human_hz = *m.human_hz;
      if (m.top_k) opt.top_k = *m.top_k;
      opt.validate();
      auto doc = scenario_to_json(base_);
      doc.merge_patch(m.scenario);
      const Scenario sc = scenario_from_json(doc);
      const SessionOptions previous = opt_;
      opt_ = opt;
      try {
        reset(sc);
      } catch (...) {
        opt_ = previous;
        throw;
      }
    } catch (const Error& e) {
      return {ErrorMsg{e.what(), "config"}};
    }
    return greeting();
  }

  std::vector<WireMessage> advance(int steps) {
    std::vector<WireMessage> out;
    Engine& e = *engine_;
    const long target = e.human_steps_taken() + steps;
    while (!e.finished() && e.human_steps_taken() < target)
      if (e.step()) out.push_back(state_update());
    TickMsg t;
    t.steps = steps;
    t.t = static_cast<double>(e.human_steps_taken() - 1) * e.human_step_period();
    t.human = e.human_cell();
    t.finished = e.finished();
    out.push_back(t);
    return out;
  }

  Scenario base_;
  SessionOptions opt_;
  std::unique_ptr<Engine> engine_;
  SteppedSource* human_{nullptr};
  long seq_{0};
};

}  // namespace confplan
