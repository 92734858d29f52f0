#pragma once

// Near-hover quadcopter: p' = v, v' = (g tan(pitch), -g tan(roll), thrust - g).
// Controls are thrust (m/s^2) and roll / pitch angles (rad).

#include <algorithm>
#include <cmath>

#include "confplan/trajectory.hpp"

namespace confplan {

inline constexpr double kGravity = 9.81;

struct QuadState6 {
  Vec3 position;
  Vec3 velocity;

  friend bool operator==(const QuadState6&, const QuadState6&) = default;
};

struct QuadControl {
  double thrust{kGravity};
  double roll{0.0};
  double pitch{0.0};

  friend bool operator==(const QuadControl&, const QuadControl&) = default;
};

struct QuadLimits {
  double angle_max{0.35};
  double thrust_min{0.5 * kGravity};
  double thrust_max{1.5 * kGravity};

  bool admits(const QuadControl& c) const {
    // Small slack so clipped commands never trip the check on rounding.
    constexpr double eps = 1e-12;
    return std::abs(c.roll) <= angle_max + eps && std::abs(c.pitch) <= angle_max + eps &&
           c.thrust >= thrust_min - eps && c.thrust <= thrust_max + eps;
  }
};

enum class Integrator { Euler, RK4 };

inline Vec3 quad_acceleration(const QuadControl& c) {
  return {kGravity * std::tan(c.pitch), -kGravity * std::tan(c.roll), c.thrust - kGravity};
}

inline QuadState6 step_quad(const QuadState6& s, const QuadControl& c, double dt,
                            const QuadLimits& limits = {}, Integrator method = Integrator::Euler) {
  if (!(dt > 0.0)) throw Error("step_quad: dt must be positive");
  if (!limits.admits(c)) throw Error("control limit violation");
  const Vec3 a = quad_acceleration(c);
  if (method == Integrator::Euler)
    return {s.position + dt * s.velocity, s.velocity + dt * a};
  // Acceleration is constant over the step, so RK4 reduces to the exact
  // constant-acceleration update.
  return {s.position + dt * s.velocity + (0.5 * dt * dt) * a, s.velocity + dt * a};
}

inline Vec3 project(const QuadState6& s) { return s.position; }

struct TrackingGains {
  double kp{36.0};
  double kd{12.0};
};

// Saturated PD on position/velocity error with the reference velocity fed
// forward, mapped through the near-hover inversion and clipped to limits.
inline QuadControl track(const QuadState6& s, const Vec3& ref_point, const Vec3& ref_velocity,
                         const TrackingGains& gains = {}, const QuadLimits& limits = {}) {
  const Vec3 ep = ref_point - s.position;
  const Vec3 ev = ref_velocity - s.velocity;
  const Vec3 a = gains.kp * ep + gains.kd * ev;
  QuadControl c;
  c.pitch = std::clamp(std::atan(a.x / kGravity), -limits.angle_max, limits.angle_max);
  c.roll = std::clamp(std::atan(-a.y / kGravity), -limits.angle_max, limits.angle_max);
  c.thrust = std::clamp(a.z + kGravity, limits.thrust_min, limits.thrust_max);
  return c;
}

}  // namespace confplan
