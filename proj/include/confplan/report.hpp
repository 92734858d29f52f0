#pragma once

// Plain-text outputs: metrics rows, per-run JSON summaries, cycle and state
// logs, belief snapshots and comparison tables. Numbers use the shortest
// round-trip decimal form so files re-read exactly.

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "confplan/sim.hpp"

namespace confplan {

inline constexpr const char* kMetricsHeader =
    "method,trajectory,min_ground_distance,completion_time,collision_occurred,timed_out,"
    "max_err_x,max_err_y,max_err_z,tracking_violations,plans_certified,replans,final_mean_beta";

inline void write_metrics_row(std::ostream& os, const std::string& method, const std::string& trajectory,
                              const RunMetrics& m) {
  os << method << ',' << trajectory << ',' << format_double(m.min_ground_distance) << ','
     << format_double(m.completion_time) << ',' << (m.collision_occurred ? 1 : 0) << ','
     << (m.timed_out ? 1 : 0) << ',' << format_double(m.max_tracking_error.x) << ','
     << format_double(m.max_tracking_error.y) << ',' << format_double(m.max_tracking_error.z) << ','
     << m.tracking_violations << ',' << (m.plans_certified ? 1 : 0) << ',' << m.replans << ','
     << format_double(m.final_mean_beta) << '\n';
}

inline nlohmann::json summary_json(const std::string& method, const std::string& trajectory,
                                   const RunMetrics& m) {
  return {{"method", method},
          {"trajectory", trajectory},
          {"min_ground_distance", m.min_ground_distance},
          {"completion_time", m.completion_time},
          {"collision_occurred", m.collision_occurred},
          {"timed_out", m.timed_out},
          {"max_tracking_error", {m.max_tracking_error.x, m.max_tracking_error.y, m.max_tracking_error.z}},
          {"tracking_violations", m.tracking_violations},
          {"plans_certified", m.plans_certified},
          {"replans", m.replans},
          {"plan_overruns", m.plan_overruns},
          {"final_mean_beta", m.final_mean_beta},
          {"final_beta_marginal", m.final_beta_marginal},
          {"final_goal_marginal", m.final_goal_marginal}};
}

inline void write_cycles_csv(std::ostream& os, const RunMetrics& m) {
  os << "t,human_col,human_row,mean_beta,prediction_dt,plan_cost,plan_max_pcoll,plan_reached_goal,"
        "replan_flag,unsafe_start,plan_overrun,beta_marginal\n";
  for (const auto& c : m.cycles) {
    os << format_double(c.t) << ',' << c.human_cell.x << ',' << c.human_cell.y << ','
       << format_double(c.mean_beta) << ',' << format_double(c.prediction_dt) << ','
       << format_double(c.plan_cost) << ',' << format_double(c.plan_max_pcoll) << ','
       << (c.plan_reached_goal ? 1 : 0) << ',' << (c.replan_flag ? 1 : 0) << ','
       << (c.unsafe_start ? 1 : 0) << ',' << (c.plan_overrun ? 1 : 0) << ',';
    for (std::size_t i = 0; i < c.beta_marginal.size(); ++i)
      os << (i ? ";" : "") << format_double(c.beta_marginal[i]);
    os << '\n';
  }
}

inline void write_human_steps_csv(std::ostream& os, const RunMetrics& m) {
  os << "t,col,row,observations,mean_beta,speed\n";
  for (const auto& h : m.human_steps)
    os << format_double(h.t) << ',' << h.cell.x << ',' << h.cell.y << ',' << h.observations << ','
       << format_double(h.mean_beta) << ',' << format_double(h.speed) << '\n';
}

inline void write_states_csv(std::ostream& os, const RunMetrics& m) {
  os << "t,px,py,pz,vx,vy,vz,ref_x,ref_y,ref_z\n";
  for (const auto& s : m.states) {
    const auto& p = s.state.position;
    const auto& v = s.state.velocity;
    os << format_double(s.t) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
       << format_double(p.z) << ',' << format_double(v.x) << ',' << format_double(v.y) << ','
       << format_double(v.z) << ',' << format_double(s.reference.x) << ','
       << format_double(s.reference.y) << ',' << format_double(s.reference.z) << '\n';
  }
}

inline void write_belief_csv(std::ostream& os, const ConfidenceBelief& b) {
  os << "beta,goal,prob\n";
  for (std::size_t k = 0; k < b.num_betas(); ++k)
    for (std::size_t g = 0; g < b.num_goals(); ++g)
      os << format_double(b.betas()[k]) << ',' << g << ',' << format_double(b(k, g)) << '\n';
}

inline void write_comparison_runs_csv(std::ostream& os, const ComparisonTable& t) {
  os << kMetricsHeader << '\n';
  for (const auto& r : t.rows) write_metrics_row(os, r.method, r.trajectory, r.metrics);
}

inline void write_comparison_aggregate_csv(std::ostream& os, const ComparisonTable& t) {
  os << "method,runs_collided,runs_timed_out,"
        "min_distance_q1,min_distance_median,min_distance_q3,"
        "completion_time_q1,completion_time_median,completion_time_q3,"
        "time_difference_q1,time_difference_median,time_difference_q3\n";
  for (const auto& a : t.aggregates) {
    os << a.method << ',' << a.collisions << ',' << a.timeouts;
    for (const Quartiles* q : {&a.min_distance, &a.completion_time, &a.time_difference})
      os << ',' << format_double(q->q1) << ',' << format_double(q->median) << ',' << format_double(q->q3);
    os << '\n';
  }
}

}  // namespace confplan
