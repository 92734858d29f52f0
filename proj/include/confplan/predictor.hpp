#pragma once

// Occupancy prediction: push the Boltzmann policy through the deterministic
// grid dynamics, per (beta, goal) hypothesis, then mix by the belief.

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "confplan/inference.hpp"

namespace confplan {

class OccupancyPrediction {
 public:
  OccupancyPrediction() = default;
  OccupancyPrediction(int cols, int rows, double dt, int horizon)
      : cols_(cols), rows_(rows), dt_(dt),
        grids_(static_cast<std::size_t>(horizon) + 1,
               std::vector<double>(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), 0.0)) {}

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  double dt() const { return dt_; }
  int horizon() const { return static_cast<int>(grids_.size()) - 1; }

  const std::vector<double>& grid(int tau) const { return grids_.at(static_cast<std::size_t>(tau)); }
  std::vector<double>& grid(int tau) { return grids_.at(static_cast<std::size_t>(tau)); }

  // Past the horizon the final grid is held.
  const std::vector<double>& grid_held(int tau) const {
    return grids_[static_cast<std::size_t>(std::min(tau, horizon()))];
  }

  double at(int tau, Cell c) const {
    return grid(tau)[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(cols_) +
                     static_cast<std::size_t>(c.x)];
  }

  friend bool operator==(const OccupancyPrediction&, const OccupancyPrediction&) = default;

 private:
  int cols_{0};
  int rows_{0};
  double dt_{0.0};
  std::vector<std::vector<double>> grids_;
};

struct PredictOptions {
  // Cells below this mass are dropped after each step and the rest
  // renormalized.
  double truncation{1e-12};
  // Use only the most probable (beta, goal) instead of the belief mixture.
  bool map_only{false};
};

inline void truncate_and_renormalize(std::vector<double>& g, double threshold) {
  if (threshold <= 0.0) return;
  double z = 0.0;
  bool dropped = false;
  for (auto& v : g) {
    if (v != 0.0 && v < threshold) {
      v = 0.0;
      dropped = true;
    }
    z += v;
  }
  if (dropped && z > 0.0)
    for (auto& v : g) v /= z;
}

inline OccupancyPrediction propagate_conditional(const Arena& arena, Cell x0, double beta,
                                                 Vec2 goal, int horizon, double dt,
                                                 double q_scale = 1.0,
                                                 const PredictOptions& opt = {}) {
  if (horizon < 0) throw Error("prediction horizon must be >= 0");
  if (!arena.contains(x0)) throw Error("state outside arena");
  OccupancyPrediction pred(arena.cols(), arena.rows(), dt, horizon);
  pred.grid(0)[arena.index(x0)] = 1.0;
  if (horizon == 0) return pred;

  const PolicyTable policy(arena, beta, goal, q_scale);
  for (int tau = 0; tau < horizon; ++tau) {
    const auto& cur = pred.grid(tau);
    auto& next = pred.grid(tau + 1);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double mass = cur[i];
      if (mass == 0.0) continue;
      const Cell c = arena.cell_at(i);
      const auto& p = policy.at(i);
      for (Action u : kAllActions) {
        const double pu = p[static_cast<std::size_t>(u)];
        if (pu == 0.0) continue;
        const auto d = displacement(u);
        next[arena.index({c.x + d.dx, c.y + d.dy})] += mass * pu;
      }
    }
    truncate_and_renormalize(next, opt.truncation);
  }
  return pred;
}

inline OccupancyPrediction propagate_conditional(const HumanModel& model, Cell x0, double beta,
                                                 std::size_t goal_index, int horizon, double dt,
                                                 const PredictOptions& opt = {}) {
  return propagate_conditional(model.arena, x0, beta, model.goal_cell_coords(goal_index),
                               horizon, dt, model.q_scale, opt);
}

// Belief-weighted mixture of the conditional predictions.
inline OccupancyPrediction propagate(Cell x0, const ConfidenceBelief& b, const HumanModel& model,
                                     int horizon, double dt, const PredictOptions& opt = {}) {
  if (b.num_goals() != model.num_goals()) throw Error("belief/model goal count mismatch");
  if (opt.map_only) {
    const auto [k, g] = b.argmax();
    return propagate_conditional(model, x0, b.betas()[k], g, horizon, dt, opt);
  }
  OccupancyPrediction out(model.arena.cols(), model.arena.rows(), dt, horizon);
  // Weights are divided by their total so rounding in the belief does not
  // leak into the grid mass.
  const double total = b.total();
  if (!(total > 0.0)) throw Error("belief has no mass");
  for (std::size_t k = 0; k < b.num_betas(); ++k) {
    for (std::size_t g = 0; g < b.num_goals(); ++g) {
      const double w = b(k, g) / total;
      if (w == 0.0) continue;
      const auto cond = propagate_conditional(model, x0, b.betas()[k], g, horizon, dt, opt);
      for (int tau = 0; tau <= horizon; ++tau) {
        auto& dst = out.grid(tau);
        const auto& src = cond.grid(tau);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
      }
    }
  }
  return out;
}

inline OccupancyPrediction propagate(Cell x0, const ConfidenceBelief& b, const HumanModel& model,
                                     int horizon, const PredictOptions& opt = {}) {
  return propagate(x0, b, model, horizon, model.step_period(), opt);
}

inline std::vector<Cell> support_above(const OccupancyPrediction& pred, int tau, double threshold) {
  if (tau < 0 || tau > pred.horizon()) throw Error("tau outside prediction horizon");
  std::vector<Cell> out;
  const auto& g = pred.grid(tau);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] > threshold)
      out.push_back({static_cast<int>(i % static_cast<std::size_t>(pred.cols())),
                     static_cast<int>(i / static_cast<std::size_t>(pred.cols()))});
  return out;
}

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigError("malformed number: '" + std::string(s) + "'");
  return v;
}

// Occupancy dump:
//   # confplan occupancy v1
//   T,dt,rows,cols
//   <T>,<dt>,<rows>,<cols>
//   tau,row,col,prob
//   <one line per nonzero cell, tau-major, then row, then col>
inline void write_occupancy(std::ostream& os, const OccupancyPrediction& pred) {
  os << "# confplan occupancy v1\n";
  os << "T,dt,rows,cols\n";
  os << pred.horizon() << ',' << format_double(pred.dt()) << ',' << pred.rows() << ','
     << pred.cols() << '\n';
  os << "tau,row,col,prob\n";
  for (int tau = 0; tau <= pred.horizon(); ++tau) {
    const auto& g = pred.grid(tau);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == 0.0) continue;
      const auto row = i / static_cast<std::size_t>(pred.cols());
      const auto col = i % static_cast<std::size_t>(pred.cols());
      os << tau << ',' << row << ',' << col << ',' << format_double(g[i]) << '\n';
    }
  }
}

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigError("malformed integer: '" + std::string(s) + "'");
  return v;
}
}  // namespace detail

inline OccupancyPrediction read_occupancy(std::istream& is) {
  std::string line;
  auto next_line = [&]() {
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next_line() || line != "T,dt,rows,cols") throw ConfigError("occupancy dump: bad header");
  if (!next_line()) throw ConfigError("occupancy dump: missing dimensions");
  const auto dims = detail::split_csv(line);
  if (dims.size() != 4) throw ConfigError("occupancy dump: bad dimensions");
  const int horizon = detail::parse_int(dims[0]);
  const double dt = parse_double(dims[1]);
  const int rows = detail::parse_int(dims[2]);
  const int cols = detail::parse_int(dims[3]);
  if (horizon < 0 || rows < 1 || cols < 1) throw ConfigError("occupancy dump: bad dimensions");
  if (!next_line() || line != "tau,row,col,prob") throw ConfigError("occupancy dump: bad record header");
  OccupancyPrediction pred(cols, rows, dt, horizon);
  while (next_line()) {
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ConfigError("occupancy dump: bad record '" + line + "'");
    const int tau = detail::parse_int(f[0]);
    const int row = detail::parse_int(f[1]);
    const int col = detail::parse_int(f[2]);
    if (tau < 0 || tau > horizon || row < 0 || row >= rows || col < 0 || col >= cols)
      throw ConfigError("occupancy dump: record out of range '" + line + "'");
    pred.grid(tau)[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                   static_cast<std::size_t>(col)] = parse_double(f[3]);
  }
  return pred;
}

}  // namespace confplan
