#pragma once

// Scenario description shared by the simulator, the CLI and the live server.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "confplan/inference.hpp"
#include "confplan/planner.hpp"
#include "confplan/robot.hpp"

namespace confplan {

enum class TrajectoryKind { Direct, SpillDetour, Triangle };

inline std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Direct: return "direct";
    case TrajectoryKind::SpillDetour: return "spill_detour";
    case TrajectoryKind::Triangle: return "triangle";
  }
  return "direct";
}

inline TrajectoryKind parse_trajectory_kind(const std::string& s) {
  if (s == "direct") return TrajectoryKind::Direct;
  if (s == "spill_detour") return TrajectoryKind::SpillDetour;
  if (s == "triangle") return TrajectoryKind::Triangle;
  throw ConfigError("unknown trajectory kind '" + s + "' (direct | spill_detour | triangle)");
}

struct TrajectoryParams {
  Vec2 start{0.4, 1.83};
  Vec2 goal{3.3, 1.83};
  Vec2 goal2{1.83, 3.3};       // triangle only
  Vec2 spill_center{1.83, 1.83};
  double spill_radius{0.3};
  double detour_clearance{0.25};  // extra distance kept from the spill edge
  int detour_side{-1};            // +1 left of travel, -1 right
  double speed{1.0};
  double rate{120.0};             // samples per second
  double hold{0.0};               // seconds standing at the end
  // Seeded perturbations (0 disables).
  double jitter_position{0.1};
  double jitter_speed{0.1};
};

// Confidence handling: Bayesian over the beta grid, or one fixed beta.
struct Method {
  bool infer{true};
  double fixed_beta{0.0};

  static Method inferred() { return {}; }
  static Method fixed(double beta) { return {false, beta}; }

  std::string label() const {
    if (infer) return "infer";
    return "fixed:" + format_double(fixed_beta);
  }

  static Method parse(const std::string& s) {
    if (s == "infer") return inferred();
    if (s.rfind("fixed:", 0) == 0) {
      const double b = parse_double(s.substr(6));
      if (!(b >= 0.0)) throw ConfigError("fixed beta must be >= 0");
      return fixed(b);
    }
    throw ConfigError("unknown method '" + s + "' (infer | fixed:VALUE)");
  }

  friend bool operator==(const Method&, const Method&) = default;
};

enum class InferenceMode { Joint, Bootstrapped };

struct Scenario {
  std::string name{"scenario"};
  KeepOutSpec keepout{};

  // Human trajectory: CSV file when set, synthetic generator otherwise.
  std::optional<std::string> trajectory_file;
  TrajectoryKind trajectory_kind{TrajectoryKind::Direct};
  TrajectoryParams trajectory{};
  std::uint64_t trajectory_seed{0};

  HumanModel model{Arena{}, {{3.3, 1.83}}};
  std::size_t speed_window{10};
  bool use_speed_estimate{true};
  double speed_min{0.5};
  double speed_max{2.0};

  Method method{};
  InferenceMode inference{InferenceMode::Joint};
  std::size_t theta_bar{0};
  std::vector<double> beta_grid{BetaGrid().values()};
  double smoothing_eps{0.02};

  int horizon{20};
  PredictOptions prediction{};

  PlanConfig planner{};
  double replan_hz{2.0};

  Vec3 robot_start{2.3, 0.6, 1.0};
  Vec3 robot_goal{2.3, 3.36, 1.0};
  double goal_tolerance{0.1};
  QuadLimits limits{};
  TrackingGains gains{};
  double control_hz{100.0};
  Integrator integrator{Integrator::Euler};
  TrackingBound bound{};

  double timeout{120.0};

  void validate() const {
    keepout.validate();
    model.validate();
    planner.validate();
    bound.validate();
    if (model.arena.cols() != keepout.arena.cols() || model.arena.cell_size() != keepout.arena.cell_size())
      throw ConfigError("scenario: model and keep-out arenas differ");
    if (horizon < 0) throw ConfigError("scenario: horizon must be >= 0");
    if (!(replan_hz > 0.0) || !(control_hz > 0.0)) throw ConfigError("scenario: rates must be positive");
    if (!(timeout > 0.0)) throw ConfigError("scenario: timeout must be positive");
    if (theta_bar >= model.num_goals()) throw ConfigError("scenario: theta_bar out of range");
    if (!(speed_min > 0.0) || !(speed_max >= speed_min)) throw ConfigError("scenario: bad speed clamp");
    if (!method.infer && !(method.fixed_beta >= 0.0)) throw ConfigError("scenario: fixed beta needs a value");
    BetaGrid{beta_grid};
    auto inside = [&](const Vec3& p) {
      return p.x >= 0 && p.y >= 0 && p.x <= keepout.arena.width() && p.y <= keepout.arena.depth() &&
             p.z >= 0 && p.z <= keepout.arena.height();
    };
    if (!inside(robot_start) || !inside(robot_goal)) throw ConfigError("scenario: robot start/goal outside arena");
  }
};

}  // namespace confplan
