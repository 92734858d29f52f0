#pragma once

// Test-only reference computations. Nothing here calls into the library's
// model / inference / prediction / planning code: each oracle recomputes its
// answer from the defining formulas by brute force.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

namespace oracle {

struct Move {
  int dx, dy;
};

// Same order as confplan::kAllActions.
inline const std::vector<Move>& moves() {
  static const std::vector<Move> m = {{0, 0},  {0, 1},   {1, 1},  {1, 0}, {1, -1},
                                      {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
  return m;
}

inline bool inside(int x, int y, int cols, int rows) {
  return x >= 0 && y >= 0 && x < cols && y < rows;
}

// Boltzmann probabilities of all 9 moves (0 for off-grid), computed in long
// double without any max-shift.
inline std::vector<double> softmax(int x, int y, double beta, double gx, double gy, int cols,
                                   int rows) {
  std::vector<long double> w(9, 0.0L);
  long double z = 0.0L;
  for (std::size_t k = 0; k < 9; ++k) {
    const auto [dx, dy] = moves()[k];
    if (!inside(x + dx, y + dy, cols, rows)) continue;
    const long double q = -std::sqrt(static_cast<long double>(dx * dx + dy * dy)) -
                          std::hypot(static_cast<long double>(x + dx - gx),
                                     static_cast<long double>(y + dy - gy));
    w[k] = std::exp(static_cast<long double>(beta) * q);
    z += w[k];
  }
  std::vector<double> p(9);
  for (std::size_t k = 0; k < 9; ++k) p[k] = static_cast<double>(w[k] / z);
  return p;
}

struct Obs {
  int x, y;     // state
  std::size_t move;  // index into moves()
};

// Sequential Bayes over a (beta x goal) table, optional uniform smoothing
// after every measurement.
inline std::vector<double> sequential_bayes(const std::vector<double>& betas,
                                            const std::vector<std::pair<double, double>>& goals,
                                            const std::vector<Obs>& obs, double eps, int cols,
                                            int rows) {
  const std::size_t nb = betas.size();
  const std::size_t ng = goals.size();
  std::vector<double> b(nb * ng, 1.0 / static_cast<double>(nb * ng));
  for (const auto& o : obs) {
    double z = 0.0;
    for (std::size_t k = 0; k < nb; ++k)
      for (std::size_t g = 0; g < ng; ++g) {
        const auto p = softmax(o.x, o.y, betas[k], goals[g].first, goals[g].second, cols, rows);
        b[k * ng + g] *= p[o.move];
        z += b[k * ng + g];
      }
    for (auto& v : b) v /= z;
    const double u = 1.0 / static_cast<double>(nb * ng);
    for (auto& v : b) v = (1.0 - eps) * v + eps * u;
  }
  return b;
}

// Occupancy by enumerating every action sequence of length T and adding the
// product of its step probabilities to the visited cell at each tau.
inline std::vector<std::vector<double>> enumerate_occupancy(int x0, int y0, double beta, double gx,
                                                            double gy, int T, int cols, int rows) {
  std::vector<std::vector<double>> occ(static_cast<std::size_t>(T) + 1,
                                       std::vector<double>(static_cast<std::size_t>(cols * rows), 0.0));
  std::function<void(int, int, int, double)> rec = [&](int x, int y, int tau, double w) {
    occ[static_cast<std::size_t>(tau)][static_cast<std::size_t>(y * cols + x)] += w;
    if (tau == T) return;
    const auto p = softmax(x, y, beta, gx, gy, cols, rows);
    for (std::size_t k = 0; k < 9; ++k) {
      if (p[k] == 0.0) continue;
      rec(x + moves()[k].dx, y + moves()[k].dy, tau + 1, w * p[k]);
    }
  };
  rec(x0, y0, 0, 1.0);
  return occ;
}

// Exact P(exists tau: human in collision with robot at tau), by enumerating
// human trajectories. `in_collision(tau, x, y)` decides membership.
inline double exact_collision_prob(int x0, int y0, double beta, double gx, double gy, int T,
                                   int cols, int rows,
                                   const std::function<bool(int, int, int)>& in_collision) {
  double total = 0.0;
  std::function<void(int, int, int, double, bool)> rec = [&](int x, int y, int tau, double w,
                                                             bool hit) {
    hit = hit || in_collision(tau, x, y);
    if (tau == T) {
      if (hit) total += w;
      return;
    }
    const auto p = softmax(x, y, beta, gx, gy, cols, rows);
    for (std::size_t k = 0; k < 9; ++k) {
      if (p[k] == 0.0) continue;
      rec(x + moves()[k].dx, y + moves()[k].dy, tau + 1, w * p[k], hit);
    }
  };
  rec(x0, y0, 0, 1.0, false);
  return total;
}

// Constrained planning optimum over a time-expanded grid by backward
// dynamic programming: robot on integer lattice points, 9 moves per step,
// cost |u| + c0, allowed(tau, x, y) encodes the per-waypoint constraint,
// arrival at (gx, gy) at any tau <= T ends the trajectory.
inline double constrained_optimum(int sx, int sy, int gx, int gy, int T, int cols, int rows,
                                  double c0, const std::function<bool(int, int, int)>& allowed) {
  const double inf = std::numeric_limits<double>::infinity();
  if (!allowed(0, sx, sy)) return inf;
  // cost_to_go[tau][cell]
  std::vector<std::vector<double>> ctg(static_cast<std::size_t>(T) + 1,
                                       std::vector<double>(static_cast<std::size_t>(cols * rows), inf));
  for (int tau = T; tau >= 0; --tau) {
    for (int y = 0; y < rows; ++y)
      for (int x = 0; x < cols; ++x) {
        if (!allowed(tau, x, y)) continue;
        double& v = ctg[static_cast<std::size_t>(tau)][static_cast<std::size_t>(y * cols + x)];
        if (x == gx && y == gy) {
          v = 0.0;
          continue;
        }
        if (tau == T) continue;
        for (const auto& m : moves()) {
          const int nx = x + m.dx, ny = y + m.dy;
          if (!inside(nx, ny, cols, rows)) continue;
          const double next = ctg[static_cast<std::size_t>(tau + 1)][static_cast<std::size_t>(ny * cols + nx)];
          if (next == inf) continue;
          v = std::min(v, next + std::sqrt(static_cast<double>(m.dx * m.dx + m.dy * m.dy)) + c0);
        }
      }
  }
  return ctg[0][static_cast<std::size_t>(sy * cols + sx)];
}

// Literal depth-first enumeration of every move sequence (tiny instances).
inline double constrained_optimum_dfs(int sx, int sy, int gx, int gy, int T, int cols, int rows,
                                      double c0, const std::function<bool(int, int, int)>& allowed) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, int, double)> rec = [&](int x, int y, int tau, double cost) {
    if (!allowed(tau, x, y)) return;
    if (x == gx && y == gy) {
      best = std::min(best, cost);
      return;
    }
    if (tau == T) return;
    for (const auto& m : moves()) {
      const int nx = x + m.dx, ny = y + m.dy;
      if (!inside(nx, ny, cols, rows)) continue;
      rec(nx, ny, tau + 1, cost + std::sqrt(static_cast<double>(m.dx * m.dx + m.dy * m.dy)) + c0);
    }
  };
  rec(sx, sy, 0, 0.0);
  return best;
}

// Plain Dijkstra on the static 8-connected grid with cost |u| + c0.
inline double grid_shortest_path(int sx, int sy, int gx, int gy, int cols, int rows, double c0) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(static_cast<std::size_t>(cols * rows), inf);
  std::vector<bool> done(d.size(), false);
  d[static_cast<std::size_t>(sy * cols + sx)] = 0.0;
  for (;;) {
    std::size_t u = d.size();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!done[i] && d[i] < inf && (u == d.size() || d[i] < d[u])) u = i;
    if (u == d.size()) break;
    done[u] = true;
    const int x = static_cast<int>(u) % cols, y = static_cast<int>(u) / cols;
    for (const auto& m : moves()) {
      if (m.dx == 0 && m.dy == 0) continue;
      const int nx = x + m.dx, ny = y + m.dy;
      if (!inside(nx, ny, cols, rows)) continue;
      const double c = d[u] + std::sqrt(static_cast<double>(m.dx * m.dx + m.dy * m.dy)) + c0;
      double& dv = d[static_cast<std::size_t>(ny * cols + nx)];
      dv = std::min(dv, c);
    }
  }
  return d[static_cast<std::size_t>(gy * cols + gx)];
}

}  // namespace oracle
