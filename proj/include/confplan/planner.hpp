#pragma once

// Time-stamped A* over a planar lattice (spacing v_R * dt, anchored at the
// start state) with per-node rejection of states whose marginal collision
// probability exceeds the threshold.
//
// Step cost is |u| + c0 with |u| in lattice units (0, 1 or sqrt 2). Past the
// prediction horizon the final occupancy grid is held, so with an unbounded
// step budget every step >= T collapses onto one time layer.

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <tuple>
#include <vector>

#include "confplan/safety.hpp"

namespace confplan {

class PlanError : public Error {
 public:
  using Error::Error;
};

struct PlanConfig {
  double p_threshold{0.01};
  double robot_speed{0.25};  // m/s per axis
  double step_cost{0.5};     // c0
  Vec3 goal;
  double dt{0.0};            // seconds per step; 0 = use the prediction's dt
  int max_steps{0};          // 0 = unbounded (time layers merge past the horizon)
  bool fallback{true};       // best-progress plan when the goal is unreachable
  bool allow_unsafe_start{false};

  void validate() const {
    if (!(p_threshold >= 0.0 && p_threshold <= 1.0))
      throw ConfigError("planner: p_threshold must be in [0, 1]");
    if (!(robot_speed > 0.0)) throw ConfigError("planner: robot speed must be positive");
    if (!(dt >= 0.0)) throw ConfigError("planner: dt must be >= 0");
    if (!(step_cost >= 0.0)) throw ConfigError("planner: step cost must be >= 0");
    if (max_steps < 0) throw ConfigError("planner: max_steps must be >= 0");
  }
};

namespace detail {

struct Lattice {
  Vec3 origin;
  double step{0.0};
  int i_min{0}, i_max{0}, j_min{0}, j_max{0};

  int width() const { return i_max - i_min + 1; }
  int height() const { return j_max - j_min + 1; }
  bool contains(int i, int j) const { return i >= i_min && i <= i_max && j >= j_min && j <= j_max; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j - j_min) * static_cast<std::size_t>(width()) +
           static_cast<std::size_t>(i - i_min);
  }
  Vec3 position(int i, int j) const {
    return {origin.x + step * i, origin.y + step * j, origin.z};
  }
};

inline Lattice make_lattice(const Vec3& origin, double step, const Arena& arena) {
  Lattice l{origin, step};
  const double tol = 1e-9 * step;
  l.i_min = static_cast<int>(std::ceil((0.0 - origin.x - tol) / step));
  l.i_max = static_cast<int>(std::floor((arena.width() - origin.x + tol) / step));
  l.j_min = static_cast<int>(std::ceil((0.0 - origin.y - tol) / step));
  l.j_max = static_cast<int>(std::floor((arena.depth() - origin.y + tol) / step));
  return l;
}

// Octile distance plus c0 per remaining step: never overestimates.
inline double heuristic(int di, int dj, double c0) {
  const int a = std::abs(di);
  const int b = std::abs(dj);
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  return std::sqrt(2.0) * lo + (hi - lo) + c0 * hi;
}

}  // namespace detail

inline PlannedTrajectory plan(const Vec3& start, const OccupancyPrediction& pred,
                              const PlanConfig& cfg, const KeepOutSpec& keepout,
                              const TrackingBound& bound, double start_time = 0.0) {
  cfg.validate();
  const Arena& arena = keepout.arena;
  detail::check_grid_matches(pred, arena);
  if (start.x < 0.0 || start.y < 0.0 || start.x > arena.width() || start.y > arena.depth())
    throw PlanError("start outside arena");

  const double dt = cfg.dt > 0.0 ? cfg.dt : pred.dt();
  if (!(dt > 0.0)) throw ConfigError("planner: no time step");
  const auto lat = detail::make_lattice(start, cfg.robot_speed * dt, arena);
  const int goal_i = std::clamp(static_cast<int>(std::lround((cfg.goal.x - start.x) / lat.step)),
                                lat.i_min, lat.i_max);
  const int goal_j = std::clamp(static_cast<int>(std::lround((cfg.goal.y - start.y) / lat.step)),
                                lat.j_min, lat.j_max);

  const bool merged = cfg.max_steps == 0;
  const int layers = merged ? pred.horizon() + 1 : cfg.max_steps + 1;
  const std::size_t plane = static_cast<std::size_t>(lat.width()) * static_cast<std::size_t>(lat.height());
  const std::size_t num_nodes = plane * static_cast<std::size_t>(layers);
  auto layer_of = [&](int tau) { return merged ? std::min(tau, pred.horizon()) : tau; };

  // Marginal collision probability per (lattice cell, occupancy layer).
  const int occ_layers = std::min(layers, pred.horizon() + 1);
  std::vector<double> pcache(plane * static_cast<std::size_t>(occ_layers),
                             std::numeric_limits<double>::quiet_NaN());
  auto pcoll = [&](int i, int j, int tau) {
    const int l = std::min(tau, pred.horizon());
    double& v = pcache[static_cast<std::size_t>(l) * plane + lat.index(i, j)];
    if (std::isnan(v))
      v = detail::mass_in_set(pred.grid(l), arena, collision_set(lat.position(i, j), keepout, bound));
    return v;
  };

  if (pcoll(0, 0, 0) > cfg.p_threshold && !cfg.allow_unsafe_start)
    throw PlanError("infeasible start");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<double> gcost(num_nodes, kInf);
  std::vector<std::uint32_t> parent(num_nodes, kNone);
  std::vector<std::uint8_t> closed(num_nodes, 0);
  std::vector<std::int32_t> depth(num_nodes, 0);

  // (f, tau, lattice index, node id); lexicographic min first.
  using Entry = std::tuple<double, int, std::size_t, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  auto node_id = [&](int i, int j, int tau) {
    return static_cast<std::uint32_t>(static_cast<std::size_t>(layer_of(tau)) * plane + lat.index(i, j));
  };
  auto decode = [&](std::uint32_t id, int& i, int& j) {
    const std::size_t c = id % plane;
    i = static_cast<int>(c % static_cast<std::size_t>(lat.width())) + lat.i_min;
    j = static_cast<int>(c / static_cast<std::size_t>(lat.width())) + lat.j_min;
  };

  const std::uint32_t start_id = node_id(0, 0, 0);
  gcost[start_id] = 0.0;
  open.emplace(detail::heuristic(goal_i, goal_j, cfg.step_cost), 0, lat.index(0, 0), start_id);

  std::uint32_t found = kNone;
  std::uint32_t best = start_id;  // best progress so far
  double best_dist = std::hypot(static_cast<double>(goal_i), static_cast<double>(goal_j));

  while (!open.empty()) {
    const auto [f, tau, cidx, id] = open.top();
    open.pop();
    if (closed[id]) continue;
    closed[id] = 1;
    int i = 0, j = 0;
    decode(id, i, j);
    if (i == goal_i && j == goal_j) {
      found = id;
      break;
    }
    const double dist = std::hypot(static_cast<double>(goal_i - i), static_cast<double>(goal_j - j));
    if (dist < best_dist || (dist == best_dist && gcost[id] < gcost[best])) {
      best_dist = dist;
      best = id;
    }
    if (!merged && tau >= cfg.max_steps) continue;
    for (Action u : kAllActions) {
      const auto d = displacement(u);
      const int ni = i + d.dx;
      const int nj = j + d.dy;
      if (!lat.contains(ni, nj)) continue;
      const int ntau = tau + 1;
      if (pcoll(ni, nj, ntau) > cfg.p_threshold) continue;  // early rejection
      const std::uint32_t nid = node_id(ni, nj, ntau);
      if (closed[nid]) continue;
      const double g = gcost[id] + action_norm(u) + cfg.step_cost;
      if (g < gcost[nid]) {
        gcost[nid] = g;
        parent[nid] = id;
        depth[nid] = depth[id] + 1;
        open.emplace(g + detail::heuristic(goal_i - ni, goal_j - nj, cfg.step_cost), ntau,
                     lat.index(ni, nj), nid);
      }
    }
  }

  PlannedTrajectory out;
  std::uint32_t tail = found;
  if (found == kNone) {
    if (!cfg.fallback) throw PlanError("no safe plan");
    tail = best;
  }
  out.reached_goal = found != kNone;
  out.total_cost = gcost[tail];

  std::vector<std::uint32_t> chain;
  for (std::uint32_t id = tail; id != kNone; id = parent[id]) chain.push_back(id);
  out.waypoints.resize(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    int i = 0, j = 0;
    decode(chain[chain.size() - 1 - k], i, j);
    auto& w = out.waypoints[k];
    w.t = start_time + dt * static_cast<double>(k);
    w.position = lat.position(i, j);
  }
  for (std::size_t k = 0; k < out.waypoints.size(); ++k) {
    auto& w = out.waypoints[k];
    if (k + 1 < out.waypoints.size())
      w.control = (1.0 / dt) * (out.waypoints[k + 1].position - w.position);
    // Recomputed from scratch rather than read back from the search cache.
    w.pcoll = detail::mass_in_set(pred.grid_held(static_cast<int>(k)), arena,
                                  collision_set(w.position, keepout, bound));
    if (w.pcoll > cfg.p_threshold && !(k == 0 && cfg.allow_unsafe_start))
      throw Error("planner produced an unsafe waypoint");
  }
  return out;
}

// True iff a waypoint at or after `now` exceeds the threshold under the new
// prediction (whose tau = 0 is `now`).
inline bool replan_needed(const PlannedTrajectory& traj, const OccupancyPrediction& pred,
                          double now, const PlanConfig& cfg, const KeepOutSpec& keepout,
                          const TrackingBound& bound) {
  detail::check_grid_matches(pred, keepout.arena);
  const double dt = pred.dt() > 0.0 ? pred.dt() : 1.0;
  for (const auto& w : traj.waypoints) {
    if (w.t < now - 1e-9) continue;
    const int tau = static_cast<int>(std::lround((w.t - now) / dt));
    const double p = detail::mass_in_set(pred.grid_held(tau), keepout.arena,
                                         collision_set(w.position, keepout, bound));
    if (p > cfg.p_threshold) return true;
  }
  return false;
}

}  // namespace confplan
