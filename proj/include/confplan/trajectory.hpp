#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "confplan/gridworld.hpp"

namespace confplan {

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3, Vec3) = default;

  Vec2 xy() const { return {x, y}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct Waypoint {
  double t{0.0};          // seconds, absolute
  Vec3 position;          // planning state x_R
  Vec3 control;           // velocity (m/s) applied from this waypoint to the next
  double pcoll{0.0};      // marginal collision probability at this waypoint
};

struct PlannedTrajectory {
  std::vector<Waypoint> waypoints;
  double total_cost{0.0};
  bool reached_goal{false};

  std::size_t size() const { return waypoints.size(); }
  bool empty() const { return waypoints.empty(); }

  double max_pcoll() const {
    double m = 0.0;
    for (const auto& w : waypoints) m = std::max(m, w.pcoll);
    return m;
  }

  double duration() const {
    return waypoints.empty() ? 0.0 : waypoints.back().t - waypoints.front().t;
  }

  // Piecewise-linear reference; clamps to the end points outside [t0, tN].
  Vec3 position_at(double t) const {
    if (waypoints.empty()) return {};
    if (t <= waypoints.front().t) return waypoints.front().position;
    if (t >= waypoints.back().t) return waypoints.back().position;
    const std::size_t i = segment(t);
    const auto& a = waypoints[i];
    const auto& b = waypoints[i + 1];
    const double s = (t - a.t) / (b.t - a.t);
    return a.position + s * (b.position - a.position);
  }

  Vec3 velocity_at(double t) const {
    if (waypoints.size() < 2 || t < waypoints.front().t || t >= waypoints.back().t) return {};
    return waypoints[segment(t)].control;
  }

 private:
  std::size_t segment(double t) const {
    std::size_t lo = 0;
    std::size_t hi = waypoints.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (waypoints[mid].t <= t) lo = mid; else hi = mid;
    }
    return lo;
  }
};

// CSV "t,px,py,pz,ux,uy,uz,pcoll".
inline void write_trajectory_csv(std::ostream& os, const PlannedTrajectory& traj) {
  os << "t,px,py,pz,ux,uy,uz,pcoll\n";
  for (const auto& w : traj.waypoints)
    os << w.t << ',' << w.position.x << ',' << w.position.y << ',' << w.position.z << ','
       << w.control.x << ',' << w.control.y << ',' << w.control.z << ',' << w.pcoll << '\n';
}

}  // namespace confplan
