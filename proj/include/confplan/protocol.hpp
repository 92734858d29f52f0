#pragma once

// Live-service wire protocol. Every message is one JSON text frame carrying
// "type" and "version" fields; see docs/protocol.md for the field reference.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "confplan/error.hpp"
#include "confplan/gridworld.hpp"
#include "confplan/trajectory.hpp"

namespace confplan {

inline constexpr int kProtocolVersion = 1;

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Server -> client, on connect and after every accepted config.
struct HelloMsg {
  std::string server{"confplan"};
  std::string mode;
  int cols{0};
  int rows{0};
  double cell_size{0.0};
  double human_box_side{0.0};
  Cell human;
  Vec3 robot;
  Vec3 robot_goal;
  std::vector<double> betas;
  std::vector<Vec2> goals;
  double human_step_period{0.0};
  double replan_period{0.0};

  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

// Client -> server: scenario overrides (same schema as scenario files) and
// session settings. Replaces the running session.
struct ConfigMsg {
  nlohmann::json scenario = nlohmann::json::object();
  std::optional<std::string> mode;
  std::optional<double> human_hz;
  std::optional<int> top_k;

  friend bool operator==(const ConfigMsg&, const ConfigMsg&) = default;
};

// Client -> server: the human's action at the next human step.
struct HumanMoveMsg {
  int dx{0};
  int dy{0};

  friend bool operator==(const HumanMoveMsg&, const HumanMoveMsg&) = default;
};

// Client -> server (scripted mode): advance `steps` human steps.
// Server -> client: a human step happened at time t.
struct TickMsg {
  int steps{1};
  double t{0.0};
  Cell human;
  bool finished{false};

  friend bool operator==(const TickMsg&, const TickMsg&) = default;
};

struct OccupancyCell {
  int tau{0};
  int row{0};
  int col{0};
  double prob{0.0};

  friend bool operator==(const OccupancyCell&, const OccupancyCell&) = default;
};

struct PlanPoint {
  double t{0.0};
  Vec3 position;
  double pcoll{0.0};

  friend bool operator==(const PlanPoint&, const PlanPoint&) = default;
};

// Server -> client, once per planning cycle.
struct StateUpdateMsg {
  long seq{0};
  double t{0.0};
  Cell human;
  Vec2 human_position;
  Vec3 robot_position;
  Vec3 robot_velocity;
  Vec3 reference;
  std::vector<double> betas;
  std::vector<double> beta_marginal;
  std::vector<double> goal_marginal;
  double mean_beta{0.0};
  double occupancy_dt{0.0};
  int horizon{0};
  int top_k{0};
  std::vector<OccupancyCell> occupancy;
  bool plan_reached_goal{false};
  double plan_cost{0.0};
  bool plan_overrun{false};
  std::vector<PlanPoint> plan;
  double min_ground_distance{std::numeric_limits<double>::infinity()};
  double completion_time{0.0};
  bool collision_occurred{false};
  bool finished{false};
  bool timed_out{false};

  friend bool operator==(const StateUpdateMsg&, const StateUpdateMsg&) = default;
};

struct AckMsg {
  std::string ref;

  friend bool operator==(const AckMsg&, const AckMsg&) = default;
};

struct ErrorMsg {
  std::string message;
  std::string ref;

  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

using WireMessage = std::variant<HelloMsg, ConfigMsg, HumanMoveMsg, TickMsg, StateUpdateMsg, AckMsg, ErrorMsg>;

inline const char* message_type(const WireMessage& m) {
  static constexpr const char* names[] = {"hello", "config", "human_move", "tick", "state_update", "ack", "error"};
  return names[m.index()];
}

namespace detail {

using nlohmann::json;

inline json j2(Vec2 v) { return json::array({v.x, v.y}); }
inline json j3(Vec3 v) { return json::array({v.x, v.y, v.z}); }
inline json jcell(Cell c) { return json::array({c.x, c.y}); }
// JSON has no infinity; null stands for "not yet measured".
inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Reader {
 public:
  explicit Reader(const json& j) : j_(j) {}

  const json& field(const char* key) const {
    const auto it = j_.find(key);
    if (it == j_.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    return *it;
  }
  bool has(const char* key) const { return j_.contains(key); }

  double num(const char* key) const { return as_num(field(key), key); }
  double num_or_inf(const char* key) const {
    const json& v = field(key);
    return v.is_null() ? std::numeric_limits<double>::infinity() : as_num(v, key);
  }
  long integer(const char* key) const {
    const json& v = field(key);
    if (!v.is_number_integer()) throw ProtocolError(std::string("field '") + key + "' must be an integer");
    return v.get<long>();
  }
  bool boolean(const char* key) const {
    const json& v = field(key);
    if (!v.is_boolean()) throw ProtocolError(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
  }
  std::string str(const char* key) const {
    const json& v = field(key);
    if (!v.is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }
  std::vector<double> nums(const char* key) const { return as_nums(field(key), key); }
  Vec2 v2(const char* key) const {
    const auto v = fixed(key, 2);
    return {v[0], v[1]};
  }
  Vec3 v3(const char* key) const {
    const auto v = fixed(key, 3);
    return {v[0], v[1], v[2]};
  }
  Cell cell(const char* key) const {
    const json& v = field(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      throw ProtocolError(std::string("field '") + key + "' must be [col, row]");
    return {v[0].get<int>(), v[1].get<int>()};
  }

  static double as_num(const json& v, const char* key) {
    if (!v.is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }
  static std::vector<double> as_nums(const json& v, const char* key) {
    if (!v.is_array()) throw ProtocolError(std::string("field '") + key + "' must be a list");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(as_num(x, key));
    return out;
  }

 private:
  std::vector<double> fixed(const char* key, std::size_t n) const {
    auto v = nums(key);
    if (v.size() != n) throw ProtocolError(std::string("field '") + key + "' has the wrong length");
    return v;
  }

  const json& j_;
};

inline json to_json(const HelloMsg& m) {
  json goals = json::array();
  for (const auto& g : m.goals) goals.push_back(j2(g));
  return {{"server", m.server},      {"mode", m.mode},
          {"cols", m.cols},          {"rows", m.rows},
          {"cell_size", m.cell_size}, {"human_box_side", m.human_box_side},
          {"human", jcell(m.human)},  {"robot", j3(m.robot)},
          {"robot_goal", j3(m.robot_goal)}, {"betas", m.betas},
          {"goals", goals},          {"human_step_period", m.human_step_period},
          {"replan_period", m.replan_period}};
}

inline json to_json(const ConfigMsg& m) {
  json j = {{"scenario", m.scenario}};
  if (m.mode) j["mode"] = *m.mode;
  if (m.human_hz) j["human_hz"] = *m.human_hz;
  if (m.top_k) j["top_k"] = *m.top_k;
  return j;
}

inline json to_json(const HumanMoveMsg& m) { return {{"dx", m.dx}, {"dy", m.dy}}; }

inline json to_json(const TickMsg& m) {
  return {{"steps", m.steps}, {"t", m.t}, {"human", jcell(m.human)}, {"finished", m.finished}};
}

inline json to_json(const StateUpdateMsg& m) {
  json occ = json::array();
  for (const auto& c : m.occupancy) occ.push_back(json::array({c.tau, c.row, c.col, c.prob}));
  json plan = json::array();
  for (const auto& p : m.plan) plan.push_back(json::array({p.t, p.position.x, p.position.y, p.position.z, p.pcoll}));
  return {
      {"seq", m.seq},
      {"t", m.t},
      {"human", {{"cell", jcell(m.human)}, {"position", j2(m.human_position)}}},
      {"robot", {{"position", j3(m.robot_position)}, {"velocity", j3(m.robot_velocity)}, {"reference", j3(m.reference)}}},
      {"belief",
       {{"betas", m.betas}, {"beta_marginal", m.beta_marginal}, {"goal_marginal", m.goal_marginal},
        {"mean_beta", m.mean_beta}}},
      {"occupancy", {{"dt", m.occupancy_dt}, {"horizon", m.horizon}, {"top_k", m.top_k}, {"cells", occ}}},
      {"plan", {{"reached_goal", m.plan_reached_goal}, {"cost", m.plan_cost}, {"overrun", m.plan_overrun},
                {"waypoints", plan}}},
      {"metrics",
       {{"min_ground_distance", jnum(m.min_ground_distance)}, {"completion_time", m.completion_time},
        {"collision_occurred", m.collision_occurred}, {"finished", m.finished}, {"timed_out", m.timed_out}}},
  };
}

inline json to_json(const AckMsg& m) { return {{"ref", m.ref}}; }
inline json to_json(const ErrorMsg& m) { return {{"message", m.message}, {"ref", m.ref}}; }

inline HelloMsg hello_from(const Reader& r) {
  HelloMsg m;
  m.server = r.str("server");
  m.mode = r.str("mode");
  m.cols = static_cast<int>(r.integer("cols"));
  m.rows = static_cast<int>(r.integer("rows"));
  m.cell_size = r.num("cell_size");
  m.human_box_side = r.num("human_box_side");
  m.human = r.cell("human");
  m.robot = r.v3("robot");
  m.robot_goal = r.v3("robot_goal");
  m.betas = r.nums("betas");
  const json& goals = r.field("goals");
  if (!goals.is_array()) throw ProtocolError("field 'goals' must be a list");
  for (const auto& g : goals) {
    const auto v = Reader::as_nums(g, "goals");
    if (v.size() != 2) throw ProtocolError("field 'goals' entries must be [x, y]");
    m.goals.push_back({v[0], v[1]});
  }
  m.human_step_period = r.num("human_step_period");
  m.replan_period = r.num("replan_period");
  return m;
}

inline ConfigMsg config_from(const Reader& r) {
  ConfigMsg m;
  if (r.has("scenario")) {
    m.scenario = r.field("scenario");
    if (!m.scenario.is_object()) throw ProtocolError("field 'scenario' must be an object");
  }
  if (r.has("mode")) m.mode = r.str("mode");
  if (r.has("human_hz")) m.human_hz = r.num("human_hz");
  if (r.has("top_k")) m.top_k = static_cast<int>(r.integer("top_k"));
  return m;
}

inline StateUpdateMsg state_from(const Reader& r) {
  StateUpdateMsg m;
  m.seq = r.integer("seq");
  m.t = r.num("t");
  const Reader human(r.field("human"));
  m.human = human.cell("cell");
  m.human_position = human.v2("position");
  const Reader robot(r.field("robot"));
  m.robot_position = robot.v3("position");
  m.robot_velocity = robot.v3("velocity");
  m.reference = robot.v3("reference");
  const Reader belief(r.field("belief"));
  m.betas = belief.nums("betas");
  m.beta_marginal = belief.nums("beta_marginal");
  m.goal_marginal = belief.nums("goal_marginal");
  m.mean_beta = belief.num("mean_beta");
  const Reader occ(r.field("occupancy"));
  m.occupancy_dt = occ.num("dt");
  m.horizon = static_cast<int>(occ.integer("horizon"));
  m.top_k = static_cast<int>(occ.integer("top_k"));
  const json& cells = occ.field("cells");
  if (!cells.is_array()) throw ProtocolError("field 'cells' must be a list");
  for (const auto& c : cells) {
    if (!c.is_array() || c.size() != 4 || !c[0].is_number_integer() || !c[1].is_number_integer() ||
        !c[2].is_number_integer() || !c[3].is_number())
      throw ProtocolError("occupancy cells must be [tau, row, col, prob]");
    m.occupancy.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<int>(), c[3].get<double>()});
  }
  const Reader plan(r.field("plan"));
  m.plan_reached_goal = plan.boolean("reached_goal");
  m.plan_cost = plan.num("cost");
  m.plan_overrun = plan.boolean("overrun");
  const json& wps = plan.field("waypoints");
  if (!wps.is_array()) throw ProtocolError("field 'waypoints' must be a list");
  for (const auto& w : wps) {
    const auto v = Reader::as_nums(w, "waypoints");
    if (v.size() != 5) throw ProtocolError("waypoints must be [t, x, y, z, pcoll]");
    m.plan.push_back({v[0], {v[1], v[2], v[3]}, v[4]});
  }
  const Reader met(r.field("metrics"));
  m.min_ground_distance = met.num_or_inf("min_ground_distance");
  m.completion_time = met.num("completion_time");
  m.collision_occurred = met.boolean("collision_occurred");
  m.finished = met.boolean("finished");
  m.timed_out = met.boolean("timed_out");
  return m;
}

}  // namespace detail

inline std::string serialize(const WireMessage& msg) {
  nlohmann::json j = std::visit([](const auto& m) { return detail::to_json(m); }, msg);
  j["type"] = message_type(msg);
  j["version"] = kProtocolVersion;
  return j.dump();
}

inline WireMessage parse_message(std::string_view text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("message is not a JSON object");
  const detail::Reader r(j);
  if (!r.has("version") || !j.at("version").is_number_integer())
    throw ProtocolError("missing protocol version");
  if (j.at("version").get<long>() != kProtocolVersion)
    throw ProtocolError("unsupported protocol version " + j.at("version").dump());
  const std::string type = r.str("type");
  if (type == "hello") return detail::hello_from(r);
  if (type == "config") return detail::config_from(r);
  if (type == "human_move")
    return HumanMoveMsg{static_cast<int>(r.integer("dx")), static_cast<int>(r.integer("dy"))};
  if (type == "tick") {
    TickMsg m;
    if (r.has("steps")) m.steps = static_cast<int>(r.integer("steps"));
    if (r.has("t")) m.t = r.num("t");
    if (r.has("human")) m.human = r.cell("human");
    if (r.has("finished")) m.finished = r.boolean("finished");
    return m;
  }
  if (type == "state_update") return detail::state_from(r);
  if (type == "ack") return AckMsg{r.str("ref")};
  if (type == "error") return ErrorMsg{r.str("message"), r.has("ref") ? r.str("ref") : std::string{}};
  throw ProtocolError("unknown message type '" + type + "'");
}

}  // namespace confplan
