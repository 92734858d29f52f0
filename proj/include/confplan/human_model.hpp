#pragma once

// Goal-directed Boltzmann (noisily rational) human action model.
//
// Q(x, u; g) = -|u| - |x + u - g|, everything in cell units, and
// P(u | x; beta, g) = exp(beta Q(x,u;g)) / sum_{u'} exp(beta Q(x,u';g))
// over the actions feasible at x.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "confplan/gridworld.hpp"

namespace confplan {

struct HumanModel {
  Arena arena{};
  std::vector<Vec2> goals;     // metric positions (m)
  double speed{1.0};           // m/s, nominal walking speed
  double q_scale{1.0};         // multiplies Q; 1 = cell units

  void validate() const {
    if (goals.empty()) throw ConfigError("human model: need at least one goal");
    for (const auto& g : goals)
      if (g.x < 0.0 || g.y < 0.0 || g.x > arena.width() || g.y > arena.depth())
        throw ConfigError("human model: goal outside arena");
    if (!(speed > 0.0)) throw ConfigError("human model: speed must be positive");
  }

  std::size_t num_goals() const { return goals.size(); }

  Vec2 goal_cell_coords(std::size_t i) const {
    return arena.to_cell_coords(goals.at(i));
  }

  // Seconds per human action at the given walking speed.
  double step_period(double v) const { return arena.cell_size() / v; }
  double step_period() const { return step_period(speed); }
};

// Q-value in cell units. `goal` is in continuous cell coordinates.
inline double q_value(const Arena& arena, Cell x, Action u, Vec2 goal) {
  if (!is_feasible(arena, x, u)) throw Error("infeasible action");
  const auto d = displacement(u);
  const Vec2 next{static_cast<double>(x.x + d.dx), static_cast<double>(x.y + d.dy)};
  return -action_norm(u) - (next - goal).norm();
}

// Probabilities indexed by static_cast<size_t>(Action); infeasible actions
// hold 0.
using ActionDistribution = std::array<double, 9>;

// Boltzmann distribution over feasible actions, max-shifted before the
// exponential so large beta cannot overflow.
inline ActionDistribution action_distribution(const Arena& arena, Cell x,
                                              double beta, Vec2 goal,
                                              double q_scale = 1.0) {
  if (!(beta >= 0.0)) throw Error("beta must be non-negative");
  ActionDistribution q{};
  std::array<bool, 9> ok{};
  double qmax = -std::numeric_limits<double>::infinity();
  for (Action u : kAllActions) {
    const auto i = static_cast<std::size_t>(u);
    ok[i] = is_feasible(arena, x, u);
    if (!ok[i]) continue;
    q[i] = q_scale * q_value(arena, x, u, goal);
    qmax = std::max(qmax, q[i]);
  }
  ActionDistribution p{};
  double z = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    if (!ok[i]) continue;
    p[i] = std::exp(beta * (q[i] - qmax));
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

inline double action_likelihood(const Arena& arena, Cell x, Action u,
                                double beta, Vec2 goal, double q_scale = 1.0) {
  if (!is_feasible(arena, x, u)) throw Error("infeasible action");
  return action_distribution(arena, x, beta, goal, q_scale)[static_cast<std::size_t>(u)];
}

inline double action_likelihood(const HumanModel& m, Cell x, Action u,
                                double beta, std::size_t goal_index) {
  return action_likelihood(m.arena, x, u, beta, m.goal_cell_coords(goal_index),
                           m.q_scale);
}

// Action distributions for every cell of the arena at one (beta, goal).
class PolicyTable {
 public:
  PolicyTable(const Arena& arena, double beta, Vec2 goal, double q_scale = 1.0)
      : probs_(arena.num_cells()) {
    for (std::size_t i = 0; i < probs_.size(); ++i)
      probs_[i] = action_distribution(arena, arena.cell_at(i), beta, goal, q_scale);
  }

  const ActionDistribution& at(std::size_t cell_index) const {
    return probs_[cell_index];
  }

 private:
  std::vector<ActionDistribution> probs_;
};

}  // namespace confplan
