#pragma once

// JSON scenario files. Sections: arena, human, model, method, planner,
// robot, sim. Every key is optional (defaults come from Scenario{}); unknown
// keys are rejected. Environment variables CONFPLAN_<SECTION>__<KEY>=value
// override file values, and section.key=value assignments override both.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "confplan/scenario.hpp"

namespace confplan {

using json = nlohmann::json;

inline constexpr const char* kEnvPrefix = "CONFPLAN_";

namespace detail {

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(name_ + ": unknown key '" + k + "'");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  void get(const std::string& key, Vec2& out) {
    if (!has(key)) return;
    const auto v = numbers(key, 2);
    out = {v[0], v[1]};
  }

  void get(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    const auto v = numbers(key, 3);
    out = {v[0], v[1], v[2]};
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  std::vector<double> numbers(const std::string& key, std::size_t n) {
    const json& a = j_.at(key);
    if (!a.is_array() || a.size() != n) throw ConfigError(path(key) + ": expected " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (const auto& x : a) {
      if (!x.is_number()) throw ConfigError(path(key) + ": expected numbers");
      v.push_back(x.get<double>());
    }
    return v;
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

inline json vec_json(Vec2 v) { return json::array({v.x, v.y}); }
inline json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir = {}) {
  Scenario sc;
  try {
    detail::Section root(doc, "scenario");
    root.get("name", sc.name);

    double side = sc.keepout.arena.side_length(), height = sc.keepout.arena.height(),
           cell = sc.keepout.arena.cell_size();
    if (root.has("arena")) {
      detail::Section s(root.at("arena"), "arena");
      s.get("side_length", side);
      s.get("height", height);
      s.get("cell_size", cell);
      s.get("human_box_side", sc.keepout.human_box_side);
    }
    sc.keepout.arena = Arena(side, height, cell);
    sc.model.arena = sc.keepout.arena;

    if (root.has("human")) {
      detail::Section s(root.at("human"), "human");
      if (s.has("trajectory_file")) {
        std::filesystem::path p = s.at("trajectory_file").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        if (!std::filesystem::exists(p)) throw ConfigError("human.trajectory_file: '" + p.string() + "' not found");
        sc.trajectory_file = p.string();
      }
      if (s.has("kind")) sc.trajectory_kind = parse_trajectory_kind(s.at("kind").get<std::string>());
      s.get("seed", sc.trajectory_seed);
      auto& t = sc.trajectory;
      s.get("start", t.start);
      s.get("goal", t.goal);
      s.get("goal2", t.goal2);
      s.get("spill_center", t.spill_center);
      s.get("spill_radius", t.spill_radius);
      s.get("detour_clearance", t.detour_clearance);
      s.get("detour_side", t.detour_side);
      s.get("speed", t.speed);
      s.get("rate", t.rate);
      s.get("hold", t.hold);
      s.get("jitter_position", t.jitter_position);
      s.get("jitter_speed", t.jitter_speed);
    }

    if (root.has("model")) {
      detail::Section s(root.at("model"), "model");
      if (s.has("goals")) {
        const json& g = s.at("goals");
        if (!g.is_array()) throw ConfigError("model.goals: expected a list of [x, y]");
        sc.model.goals.clear();
        for (const auto& e : g) {
          if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError("model.goals: expected a list of [x, y]");
          sc.model.goals.push_back({e[0].get<double>(), e[1].get<double>()});
        }
      }
      s.get("speed", sc.model.speed);
      s.get("q_scale", sc.model.q_scale);
      s.get("speed_window", sc.speed_window);
      s.get("use_speed_estimate", sc.use_speed_estimate);
      s.get("speed_min", sc.speed_min);
      s.get("speed_max", sc.speed_max);
      if (s.has("inference")) {
        const auto mode = s.at("inference").get<std::string>();
        if (mode == "joint") sc.inference = InferenceMode::Joint;
        else if (mode == "bootstrapped") sc.inference = InferenceMode::Bootstrapped;
        else throw ConfigError("model.inference: expected joint | bootstrapped");
      }
      s.get("theta_bar", sc.theta_bar);
      if (s.has("beta_grid")) {
        const json& g = s.at("beta_grid");
        if (g.is_array()) {
          sc.beta_grid = g.get<std::vector<double>>();
        } else {
          detail::Section bg(g, "model.beta_grid");
          double lo = 0.05, hi = 10.0;
          std::size_t n = 10;
          bg.get("min", lo);
          bg.get("max", hi);
          bg.get("count", n);
          sc.beta_grid = BetaGrid::log_spaced(lo, hi, n);
        }
      }
      s.get("smoothing", sc.smoothing_eps);
      s.get("horizon", sc.horizon);
      s.get("truncation", sc.prediction.truncation);
      s.get("map_only", sc.prediction.map_only);
    }

    if (root.has("method")) {
      const json& m = root.at("method");
      if (m.is_string()) {
        sc.method = Method::parse(m.get<std::string>());
      } else {
        detail::Section s(m, "method");
        std::string kind = "infer";
        s.get("kind", kind);
        if (kind == "infer") {
          sc.method = Method::inferred();
        } else if (kind == "fixed") {
          if (!s.has("beta")) throw ConfigError("method: fixed requires beta");
          double b = 0.0;
          s.get("beta", b);
          sc.method = Method::fixed(b);
        } else {
          throw ConfigError("method.kind: expected infer | fixed");
        }
      }
    }

    if (root.has("planner")) {
      detail::Section s(root.at("planner"), "planner");
      s.get("p_threshold", sc.planner.p_threshold);
      s.get("robot_speed", sc.planner.robot_speed);
      s.get("step_cost", sc.planner.step_cost);
      s.get("max_steps", sc.planner.max_steps);
      s.get("fallback", sc.planner.fallback);
      s.get("allow_unsafe_start", sc.planner.allow_unsafe_start);
      s.get("replan_hz", sc.replan_hz);
    }

    if (root.has("robot")) {
      detail::Section s(root.at("robot"), "robot");
      s.get("start", sc.robot_start);
      s.get("goal", sc.robot_goal);
      s.get("goal_tolerance", sc.goal_tolerance);
      s.get("angle_max", sc.limits.angle_max);
      s.get("thrust_min", sc.limits.thrust_min);
      s.get("thrust_max", sc.limits.thrust_max);
      s.get("kp", sc.gains.kp);
      s.get("kd", sc.gains.kd);
      s.get("control_hz", sc.control_hz);
      if (s.has("integrator")) {
        const auto m = s.at("integrator").get<std::string>();
        if (m == "euler") sc.integrator = Integrator::Euler;
        else if (m == "rk4") sc.integrator = Integrator::RK4;
        else throw ConfigError("robot.integrator: expected euler | rk4");
      }
      if (s.has("tracking_bound")) {
        Vec3 e;
        s.get("tracking_bound", e);
        sc.bound = {e.x, e.y, e.z};
      }
    }

    if (root.has("sim")) {
      detail::Section s(root.at("sim"), "sim");
      s.get("timeout", sc.timeout);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    sc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

inline json scenario_to_json(const Scenario& sc) {
  using detail::vec_json;
  json goals = json::array();
  for (const auto& g : sc.model.goals) goals.push_back(vec_json(g));
  const auto& t = sc.trajectory;
  json human = {{"kind", to_string(sc.trajectory_kind)},
                {"seed", sc.trajectory_seed},
                {"start", vec_json(t.start)},
                {"goal", vec_json(t.goal)},
                {"goal2", vec_json(t.goal2)},
                {"spill_center", vec_json(t.spill_center)},
                {"spill_radius", t.spill_radius},
                {"detour_clearance", t.detour_clearance},
                {"detour_side", t.detour_side},
                {"speed", t.speed},
                {"rate", t.rate},
                {"hold", t.hold},
                {"jitter_position", t.jitter_position},
                {"jitter_speed", t.jitter_speed}};
  if (sc.trajectory_file) human["trajectory_file"] = *sc.trajectory_file;
  json method = sc.method.infer ? json{{"kind", "infer"}} : json{{"kind", "fixed"}, {"beta", sc.method.fixed_beta}};
  return {
      {"name", sc.name},
      {"arena",
       {{"side_length", sc.keepout.arena.side_length()},
        {"height", sc.keepout.arena.height()},
        {"cell_size", sc.keepout.arena.cell_size()},
        {"human_box_side", sc.keepout.human_box_side}}},
      {"human", human},
      {"model",
       {{"goals", goals},
        {"speed", sc.model.speed},
        {"q_scale", sc.model.q_scale},
        {"speed_window", sc.speed_window},
        {"use_speed_estimate", sc.use_speed_estimate},
        {"speed_min", sc.speed_min},
        {"speed_max", sc.speed_max},
        {"inference", sc.inference == InferenceMode::Joint ? "joint" : "bootstrapped"},
        {"theta_bar", sc.theta_bar},
        {"beta_grid", sc.beta_grid},
        {"smoothing", sc.smoothing_eps},
        {"horizon", sc.horizon},
        {"truncation", sc.prediction.truncation},
        {"map_only", sc.prediction.map_only}}},
      {"method", method},
      {"planner",
       {{"p_threshold", sc.planner.p_threshold},
        {"robot_speed", sc.planner.robot_speed},
        {"step_cost", sc.planner.step_cost},
        {"max_steps", sc.planner.max_steps},
        {"fallback", sc.planner.fallback},
        {"allow_unsafe_start", sc.planner.allow_unsafe_start},
        {"replan_hz", sc.replan_hz}}},
      {"robot",
       {{"start", vec_json(sc.robot_start)},
        {"goal", vec_json(sc.robot_goal)},
        {"goal_tolerance", sc.goal_tolerance},
        {"angle_max", sc.limits.angle_max},
        {"thrust_min", sc.limits.thrust_min},
        {"thrust_max", sc.limits.thrust_max},
        {"kp", sc.gains.kp},
        {"kd", sc.gains.kd},
        {"control_hz", sc.control_hz},
        {"integrator", sc.integrator == Integrator::Euler ? "euler" : "rk4"},
        {"tracking_bound", vec_json(Vec3{sc.bound.ex, sc.bound.ey, sc.bound.ez})}}},
      {"sim", {{"timeout", sc.timeout}}},
  };
}

// Sets doc[keys...] = value, creating sections as needed. The value is
// parsed as JSON when possible and kept as a string otherwise.
inline void set_config_path(json& doc, const std::vector<std::string>& keys, const std::string& raw,
                            const std::string& origin) {
  if (keys.empty() || std::any_of(keys.begin(), keys.end(), [](const std::string& k) { return k.empty(); }))
    throw ConfigError(origin + ": empty key");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->contains(keys[i])) (*node)[keys[i]] = json::object();
    node = &(*node)[keys[i]];
    if (!node->is_object()) throw ConfigError(origin + ": '" + keys[i] + "' is not a section");
  }
  (*node)[keys.back()] = value;
}

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  for (std::size_t pos = 0;;) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + sep.size();
  }
  return out;
}

}  // namespace detail

// Applies CONFPLAN_SECTION__KEY=value entries (any depth, case-insensitive).
inline void apply_env_overrides(json& doc, const std::vector<std::string>& environ_entries) {
  const std::string prefix = kEnvPrefix;
  for (const auto& entry : environ_entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || entry.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string name = entry.substr(prefix.size(), eq - prefix.size());
    auto keys = detail::split_on(name, "__");
    for (auto& k : keys) k = detail::lower(k);
    set_config_path(doc, keys, entry.substr(eq + 1), "environment override " + name);
  }
}

// Applies section.key=value assignments (command-line --set).
inline void apply_assignments(json& doc, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + a + ": expected key=value");
    set_config_path(doc, detail::split_on(a.substr(0, eq), "."), a.substr(eq + 1), "--set " + a);
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open scenario file '" + path + "'");
  json doc = json::parse(f, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("scenario file '" + path + "': invalid JSON");
  return doc;
}

// Precedence: built-in defaults < file (optional) < environment < assignments.
inline Scenario load_scenario(const std::string& path, const std::vector<std::string>& environ_entries,
                              const std::vector<std::string>& assignments = {}) {
  json doc = path.empty() ? json::object() : read_json_file(path);
  apply_env_overrides(doc, environ_entries);
  apply_assignments(doc, assignments);
  const auto dir = path.empty() ? std::filesystem::path{} : std::filesystem::path(path).parent_path();
  return scenario_from_json(doc, dir);
}

}  // namespace confplan
