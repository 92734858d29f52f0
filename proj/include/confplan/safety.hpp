#pragma once

// Collision sets inflated by the tracking error bound, and the per-timestep
// ("marginal") collision probabilities the planner constrains.
//
// A human cell belongs to H_E(x_R) iff its center lies in the closed
// rectangle of size (l + E_x) x (l + E_y) centered on the planned (p_x, p_y).
// Altitude plays no part.

#include <algorithm>
#include <cmath>

#include "confplan/predictor.hpp"
#include "confplan/trajectory.hpp"

namespace confplan {

// Full box dimensions E_x x E_y x E_z; the tracked robot stays within
// +-E/2 of the planned position on each axis.
struct TrackingBound {
  double ex{0.1};
  double ey{0.1};
  double ez{0.1};

  void validate() const {
    if (!(ex >= 0.0 && ey >= 0.0 && ez >= 0.0))
      throw ConfigError("tracking bound: extents must be >= 0");
  }
};

struct CollisionSet {
  Vec2 center;
  double width{0.0};
  double depth{0.0};

  bool contains(Vec2 p) const {
    return std::abs(p.x - center.x) <= 0.5 * width && std::abs(p.y - center.y) <= 0.5 * depth;
  }
};

inline CollisionSet collision_set(const Vec3& robot, const KeepOutSpec& keepout,
                                  const TrackingBound& bound) {
  return {robot.xy(), keepout.human_box_side + bound.ex, keepout.human_box_side + bound.ey};
}

namespace detail {
inline void check_grid_matches(const OccupancyPrediction& pred, const Arena& arena) {
  if (pred.cols() != arena.cols() || pred.rows() != arena.rows())
    throw Error("prediction grid does not match arena");
}

inline double mass_in_set(const std::vector<double>& grid, const Arena& arena,
                          const CollisionSet& set) {
  const double cs = arena.cell_size();
  // Candidate index ranges padded by one cell; the exact test is contains().
  const int x0 = std::max(0, static_cast<int>(std::floor((set.center.x - 0.5 * set.width) / cs - 0.5)) - 1);
  const int x1 = std::min(arena.cols() - 1, static_cast<int>(std::ceil((set.center.x + 0.5 * set.width) / cs - 0.5)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor((set.center.y - 0.5 * set.depth) / cs - 0.5)) - 1);
  const int y1 = std::min(arena.rows() - 1, static_cast<int>(std::ceil((set.center.y + 0.5 * set.depth) / cs - 0.5)) + 1);
  double sum = 0.0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Cell c{x, y};
      if (set.contains(arena.center(c))) sum += grid[arena.index(c)];
    }
  return sum;
}
}  // namespace detail

inline double marginal_collision_prob(const OccupancyPrediction& pred, int tau, const Vec3& robot,
                                      const KeepOutSpec& keepout, const TrackingBound& bound) {
  if (tau < 0 || tau > pred.horizon()) throw Error("tau outside prediction horizon");
  detail::check_grid_matches(pred, keepout.arena);
  return detail::mass_in_set(pred.grid(tau), keepout.arena, collision_set(robot, keepout, bound));
}

// Max over waypoints of the marginal at tau = waypoint index. With
// hold_final_grid the last grid stands in for steps past the horizon;
// otherwise a trajectory longer than the prediction is an error.
inline double trajectory_collision_prob(const PlannedTrajectory& traj,
                                        const OccupancyPrediction& pred,
                                        const KeepOutSpec& keepout, const TrackingBound& bound,
                                        bool hold_final_grid = false) {
  if (!hold_final_grid && traj.size() > static_cast<std::size_t>(pred.horizon()) + 1)
    throw Error("trajectory longer than prediction horizon");
  detail::check_grid_matches(pred, keepout.arena);
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto set = collision_set(traj.waypoints[i].position, keepout, bound);
    worst = std::max(worst, detail::mass_in_set(pred.grid_held(static_cast<int>(i)),
                                                keepout.arena, set));
  }
  return worst;
}

}  // namespace confplan
