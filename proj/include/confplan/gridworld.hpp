#pragma once

// Discrete human state space: a square arena split into square cells, with
// 9-connected unit moves (including stay) as the human action set.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "confplan/error.hpp"

namespace confplan {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

struct Cell {
  int x{0};
  int y{0};

  friend bool operator==(Cell, Cell) = default;
};

enum class Action : std::uint8_t { Stay, N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<Action, 9> kAllActions = {
    Action::Stay, Action::N,  Action::NE, Action::E, Action::SE,
    Action::S,    Action::SW, Action::W,  Action::NW};

struct Displacement {
  int dx;
  int dy;
};

constexpr Displacement displacement(Action a) {
  switch (a) {
    case Action::Stay: return {0, 0};
    case Action::N:    return {0, 1};
    case Action::NE:   return {1, 1};
    case Action::E:    return {1, 0};
    case Action::SE:   return {1, -1};
    case Action::S:    return {0, -1};
    case Action::SW:   return {-1, -1};
    case Action::W:    return {-1, 0};
    case Action::NW:   return {-1, 1};
  }
  return {0, 0};
}

constexpr std::string_view action_name(Action a) {
  constexpr std::array<std::string_view, 9> names = {
      "stay", "N", "NE", "E", "SE", "S", "SW", "W", "NW"};
  return names[static_cast<std::size_t>(a)];
}

// Euclidean length of the move in cell units: 0, 1 or sqrt(2).
inline double action_norm(Action a) {
  const auto d = displacement(a);
  return std::hypot(static_cast<double>(d.dx), static_cast<double>(d.dy));
}

inline Action action_from_displacement(int dx, int dy) {
  for (Action a : kAllActions) {
    const auto d = displacement(a);
    if (d.dx == dx && d.dy == dy) return a;
  }
  throw Error("non-adjacent transition");
}

// Square-based box arena. Cell (x, y) covers
// [x*cell_size, (x+1)*cell_size) x [y*cell_size, (y+1)*cell_size).
class Arena {
 public:
  Arena() : Arena(3.66, 2.0, 0.1524) {}

  Arena(double side_length, double height, double cell_size)
      : side_(side_length), height_(height), cell_(cell_size) {
    if (!(cell_size > 0.0)) throw Error("arena: cell_size must be positive");
    if (!(side_length > 0.0)) throw Error("arena: side length must be positive");
    if (!(height > 0.0)) throw Error("arena: height must be positive");
    const long n = std::lround(side_length / cell_size);
    cols_ = rows_ = static_cast<int>(std::max(1L, n));
  }

  // Arena of exactly cols x rows cells (used for small test instances).
  static Arena from_cells(int cols, int rows, double cell_size = 1.0,
                          double height = 2.0) {
    if (cols < 1 || rows < 1) throw Error("arena: need at least one cell");
    Arena a(cols * cell_size, height, cell_size);
    a.cols_ = cols;
    a.rows_ = rows;
    return a;
  }

  double side_length() const { return side_; }
  double width() const { return cols_ * cell_; }
  double depth() const { return rows_ * cell_; }
  double height() const { return height_; }
  double cell_size() const { return cell_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  std::size_t num_cells() const {
    return static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_);
  }

  bool contains(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < cols_ && c.y < rows_;
  }

  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c.x);
  }

  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(cols_)),
            static_cast<int>(idx / static_cast<std::size_t>(cols_))};
  }

  Vec2 center(Cell c) const {
    return {(c.x + 0.5) * cell_, (c.y + 0.5) * cell_};
  }

  // Metric position to continuous cell coordinates (cell centers are integers).
  Vec2 to_cell_coords(Vec2 p) const {
    return {p.x / cell_ - 0.5, p.y / cell_ - 0.5};
  }

  // Nearest cell center, clamped to the arena. Exact ties resolve toward
  // `prev` when given.
  Cell snap(Vec2 p, const Cell* prev = nullptr) const {
    const Vec2 c = to_cell_coords(p);
    return {snap_axis(c.x, cols_, prev ? &prev->x : nullptr),
            snap_axis(c.y, rows_, prev ? &prev->y : nullptr)};
  }

 private:
  static int snap_axis(double v, int n, const int* prev) {
    const double fl = std::floor(v);
    int i;
    if (v - fl == 0.5 && prev != nullptr) {
      const int lo = static_cast<int>(fl);
      i = (std::abs(*prev - lo) <= std::abs(*prev - (lo + 1))) ? lo : lo + 1;
    } else {
      i = static_cast<int>(std::lround(v));
    }
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
  }

  double side_;
  double height_;
  double cell_;
  int cols_{1};
  int rows_{1};
};

// Joint keep-out set: robot within an l x l square around the human (any
// altitude), or robot outside the arena box.
struct KeepOutSpec {
  double human_box_side{0.3};
  Arena arena{};

  void validate() const {
    if (!(human_box_side > 0.0) || !(human_box_side < arena.side_length()))
      throw Error("keep-out: need 0 < l < L");
  }
};

inline bool is_feasible(const Arena& arena, Cell x, Action u) {
  const auto d = displacement(u);
  return arena.contains({x.x + d.dx, x.y + d.dy});
}

inline std::vector<Action> feasible_actions(const Arena& arena, Cell x) {
  std::vector<Action> out;
  out.reserve(kAllActions.size());
  for (Action u : kAllActions)
    if (is_feasible(arena, x, u)) out.push_back(u);
  return out;
}

inline Cell step_human(const Arena& arena, Cell x, Action u) {
  if (!arena.contains(x)) throw Error("state outside arena");
  if (!is_feasible(arena, x, u)) throw Error("infeasible action");
  const auto d = displacement(u);
  return {x.x + d.dx, x.y + d.dy};
}

inline Action infer_action(Cell prev, Cell curr) {
  return action_from_displacement(curr.x - prev.x, curr.y - prev.y);
}

// Splits a multi-cell jump into unit moves by stepping each axis toward the
// target, so every consecutive pair is one-step reachable.
inline std::vector<Cell> unit_path(Cell from, Cell to) {
  std::vector<Cell> path;
  Cell c = from;
  while (!(c == to)) {
    c.x += (to.x > c.x) - (to.x < c.x);
    c.y += (to.y > c.y) - (to.y < c.y);
    path.push_back(c);
  }
  return path;
}

}  // namespace confplan
