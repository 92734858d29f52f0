#pragma once

// Bayesian model-confidence inference over a finite grid of beta values,
// optionally joint with the goal index, plus an HMM-style uniform smoothing
// step and a windowed running speed estimate.

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <utility>
#include <vector>

#include "confplan/human_model.hpp"

namespace confplan {

class BetaGrid {
 public:
  BetaGrid() : BetaGrid(log_spaced(0.05, 10.0, 10)) {}

  explicit BetaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ConfigError("beta grid: empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 0.0)) throw ConfigError("beta grid: negative value");
      if (i > 0 && !(values_[i] > values_[i - 1]))
        throw ConfigError("beta grid: values must be strictly increasing");
    }
  }

  // A single fixed beta (the fixed-confidence baselines).
  static BetaGrid fixed(double beta) { return BetaGrid(std::vector<double>{beta}); }

  static std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
    if (n < 2 || !(lo > 0.0) || !(hi > lo))
      throw ConfigError("beta grid: need n >= 2 and 0 < lo < hi");
    std::vector<double> v(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

// Probability table over (beta index, goal index), row-major in beta.
class ConfidenceBelief {
 public:
  ConfidenceBelief() = default;

  // Uniform prior.
  ConfidenceBelief(BetaGrid betas, std::size_t num_goals, double smoothing_eps = 0.02)
      : betas_(std::move(betas)), goals_(num_goals), eps_(smoothing_eps),
        table_(betas_.size() * num_goals,
               1.0 / static_cast<double>(betas_.size() * num_goals)) {
    if (num_goals == 0) throw ConfigError("belief: need at least one goal");
    if (!(eps_ >= 0.0 && eps_ <= 1.0)) throw ConfigError("belief: smoothing must be in [0, 1]");
  }

  ConfidenceBelief(BetaGrid betas, std::size_t num_goals, std::vector<double> table,
                   double smoothing_eps)
      : betas_(std::move(betas)), goals_(num_goals), eps_(smoothing_eps),
        table_(std::move(table)) {
    if (table_.size() != betas_.size() * goals_) throw Error("belief: table size mismatch");
  }

  const BetaGrid& betas() const { return betas_; }
  std::size_t num_betas() const { return betas_.size(); }
  std::size_t num_goals() const { return goals_; }
  std::size_t size() const { return table_.size(); }
  double smoothing() const { return eps_; }

  double operator()(std::size_t beta_i, std::size_t goal_i) const {
    return table_[beta_i * goals_ + goal_i];
  }
  double& operator()(std::size_t beta_i, std::size_t goal_i) {
    return table_[beta_i * goals_ + goal_i];
  }
  const std::vector<double>& table() const { return table_; }
  std::vector<double>& table() { return table_; }

  double total() const { return std::accumulate(table_.begin(), table_.end(), 0.0); }

  void normalize() {
    const double z = total();
    if (!(z > 0.0) || !std::isfinite(z)) throw Error("degenerate likelihood");
    for (auto& v : table_) v /= z;
  }

  double mean_beta() const {
    double m = 0.0;
    for (std::size_t b = 0; b < num_betas(); ++b)
      for (std::size_t g = 0; g < goals_; ++g) m += betas_[b] * (*this)(b, g);
    return m;
  }

  // Highest-probability cell; ties go to the lowest index.
  std::pair<std::size_t, std::size_t> argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < table_.size(); ++i)
      if (table_[i] > table_[best]) best = i;
    return {best / goals_, best % goals_};
  }

 private:
  BetaGrid betas_;
  std::size_t goals_{1};
  double eps_{0.02};
  std::vector<double> table_;
};

// b'(beta, goal) ∝ P(u | x; beta, goal) b(beta, goal).
inline ConfidenceBelief measurement_update(const ConfidenceBelief& b, Cell x, Action u,
                                           const HumanModel& model) {
  if (b.num_goals() != model.num_goals()) throw Error("belief/model goal count mismatch");
  if (!is_feasible(model.arena, x, u)) throw Error("infeasible action");
  ConfidenceBelief out = b;
  for (std::size_t g = 0; g < b.num_goals(); ++g) {
    const Vec2 goal = model.goal_cell_coords(g);
    for (std::size_t k = 0; k < b.num_betas(); ++k)
      out(k, g) = b(k, g) *
                  action_likelihood(model.arena, x, u, b.betas()[k], goal, model.q_scale);
  }
  out.normalize();
  return out;
}

// Beta-only update with the goal fixed at the running estimate theta_bar.
// `b` must have a single goal column.
inline ConfidenceBelief bootstrapped_update(const ConfidenceBelief& b,
                                            std::size_t theta_bar, Cell x, Action u,
                                            const HumanModel& model) {
  if (b.num_goals() != 1) throw Error("bootstrapped belief must be over beta only");
  if (!is_feasible(model.arena, x, u)) throw Error("infeasible action");
  const Vec2 goal = model.goal_cell_coords(theta_bar);
  ConfidenceBelief out = b;
  for (std::size_t k = 0; k < b.num_betas(); ++k)
    out(k, 0) = b(k, 0) *
                action_likelihood(model.arena, x, u, b.betas()[k], goal, model.q_scale);
  out.normalize();
  return out;
}

// b' = (1 - eps) b + eps * uniform.
inline ConfidenceBelief time_update(const ConfidenceBelief& b) {
  ConfidenceBelief out = b;
  const double eps = b.smoothing();
  const double u = 1.0 / static_cast<double>(b.size());
  for (auto& v : out.table()) v = (1.0 - eps) * v + eps * u;
  return out;
}

struct Marginals {
  std::vector<double> beta;
  std::vector<double> goal;
};

inline Marginals marginals(const ConfidenceBelief& b) {
  Marginals m{std::vector<double>(b.num_betas(), 0.0),
              std::vector<double>(b.num_goals(), 0.0)};
  for (std::size_t k = 0; k < b.num_betas(); ++k)
    for (std::size_t g = 0; g < b.num_goals(); ++g) {
      m.beta[k] += b(k, g);
      m.goal[g] += b(k, g);
    }
  const double zb = std::accumulate(m.beta.begin(), m.beta.end(), 0.0);
  const double zg = std::accumulate(m.goal.begin(), m.goal.end(), 0.0);
  for (auto& v : m.beta) v /= zb;
  for (auto& v : m.goal) v /= zg;
  return m;
}

class SpeedEstimate {
 public:
  static constexpr double kMinSpeed = 1e-3;

  explicit SpeedEstimate(double initial = 1.0, std::size_t window = 10)
      : value_(initial), window_(window) {
    if (window_ < 1) throw ConfigError("speed estimate: window must be >= 1");
    if (!(initial > 0.0)) throw ConfigError("speed estimate: initial speed must be positive");
  }

  double value() const { return value_; }
  std::size_t window() const { return window_; }
  std::size_t num_samples() const { return samples_.size(); }

  friend SpeedEstimate update_speed(SpeedEstimate est, double displacement, double dt);

 private:
  double value_;
  std::size_t window_;
  std::deque<double> samples_;
};

// Windowed mean of displacement / dt, floored at kMinSpeed so the estimate
// stays positive for a human standing still.
inline SpeedEstimate update_speed(SpeedEstimate est, double displacement, double dt) {
  if (!(dt > 0.0)) throw Error("speed estimate: dt must be positive");
  est.samples_.push_back(displacement / dt);
  while (est.samples_.size() > est.window_) est.samples_.pop_front();
  const double mean = std::accumulate(est.samples_.begin(), est.samples_.end(), 0.0) /
                     static_cast<double>(est.samples_.size());
  est.value_ = std::max(mean, SpeedEstimate::kMinSpeed);
  return est;
}

}  // namespace confplan
