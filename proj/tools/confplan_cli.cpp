// confplan command-line entry point.
//
// Exit codes: 0 success, 1 runtime or verification failure, 2 configuration
// error, 3 infeasible plan, 4 simulation timeout.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "CLI11.hpp"
#include "confplan/config.hpp"
#include "confplan/report.hpp"
#include "confplan/ws_server.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace confplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitTimeout = 4;

constexpr const char* kSchemaHelp = R"(Scenario file (JSON, every key optional):
  arena   { side_length, height, cell_size, human_box_side }
  human   { trajectory_file | kind: direct|spill_detour|triangle, seed, start, goal,
            goal2, spill_center, spill_radius, detour_clearance, detour_side,
            speed, rate, hold, jitter_position, jitter_speed }
  model   { goals: [[x,y],...], speed, q_scale, speed_window, use_speed_estimate,
            speed_min, speed_max, inference: joint|bootstrapped, theta_bar,
            beta_grid: [..] | {min,max,count}, smoothing, horizon, truncation, map_only }
  method  "infer" | "fixed:B" | { kind: infer|fixed, beta }
  planner { p_threshold, robot_speed, step_cost, max_steps, fallback,
            allow_unsafe_start, replan_hz }
  robot   { start: [x,y,z], goal: [x,y,z], goal_tolerance, angle_max, thrust_min,
            thrust_max, kp, kd, control_hz, integrator: euler|rk4, tracking_bound: [ex,ey,ez] }
  sim     { timeout }
Overrides: CONFPLAN_<SECTION>__<KEY>=value in the environment, then
--set section.key=value flags, then the dedicated flags of each subcommand.)";

std::vector<std::string> environment() {
  std::vector<std::string> out;
  for (char** e = environ; e && *e; ++e) out.emplace_back(*e);
  return out;
}

struct ScenarioFlags {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--scenario", file, "Scenario JSON file (built-in defaults when omitted)")
        ->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a scenario key, e.g. --set planner.p_threshold=0.02");
  }

  Scenario load(std::vector<std::string> extra = {}) const {
    std::vector<std::string> all = sets;
    all.insert(all.end(), extra.begin(), extra.end());
    return load_scenario(file, environment(), all);
  }
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

std::string file_label(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  return s;
}

std::string trajectory_label(const Scenario& sc) {
  if (sc.trajectory_file) return fs::path(*sc.trajectory_file).stem().string();
  return to_string(sc.trajectory_kind) + "#" + std::to_string(sc.trajectory_seed);
}

// ---------------------------------------------------------------------------

struct PredictCmd {
  ScenarioFlags sc;
  std::string out;
  std::vector<double> at{0.0};
  int horizon{-1};
  bool verify{false};

  int operator()() const {
    std::vector<std::string> extra;
    if (horizon >= 0) extra.push_back("model.horizon=" + std::to_string(horizon));
    const Scenario s = sc.load(extra);
    ensure_dir(out);
    std::vector<double> times = at;
    std::sort(times.begin(), times.end());
    Engine engine(s, std::make_unique<ReplaySource>(scenario_trajectory(s)));
    int failures = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < 0.0) throw ConfigError("--at: times must be >= 0");
      do {
        engine.step();
      } while (!engine.finished() && engine.time() <= times[i]);
      const auto pred = propagate(engine.human_cell(), engine.belief(), engine.prediction_model(), s.horizon,
                                  engine.prediction_dt(), s.prediction);
      const fs::path occ = fs::path(out) / ("occupancy_" + std::to_string(i) + ".csv");
      {
        auto f = open_out(occ);
        write_occupancy(f, pred);
      }
      {
        auto f = open_out(fs::path(out) / ("belief_" + std::to_string(i) + ".csv"));
        write_belief_csv(f, engine.belief());
      }
      std::cout << "t=" << format_double(times[i]) << " human=(" << engine.human_cell().x << ","
                << engine.human_cell().y << ") mean_beta=" << format_double(engine.belief().mean_beta())
                << " -> " << occ.string() << "\n";
      if (verify) {
        std::ifstream f(occ);
        const auto back = read_occupancy(f);
        bool ok = back == pred;
        for (int tau = 0; tau <= pred.horizon(); ++tau) {
          const auto& g = pred.grid(tau);
          ok = ok && std::abs(std::accumulate(g.begin(), g.end(), 0.0) - 1.0) <= 1e-9;
        }
        std::cout << (ok ? "verify PASS " : "verify FAIL ") << occ.string() << "\n";
        failures += ok ? 0 : 1;
      }
    }
    return failures ? kExitFailure : kExitOk;
  }
};

struct PlanCmd {
  ScenarioFlags sc;
  std::string out;
  int horizon{-1};

  int operator()() const {
    std::vector<std::string> extra;
    if (horizon >= 0) extra.push_back("model.horizon=" + std::to_string(horizon));
    const Scenario s = sc.load(extra);
    ensure_dir(out);
    Engine engine(s, std::make_unique<ReplaySource>(scenario_trajectory(s)));
    engine.step();
    const auto pred = propagate(engine.human_cell(), engine.belief(), engine.prediction_model(), s.horizon,
                                engine.prediction_dt(), s.prediction);
    PlanConfig cfg = s.planner;
    cfg.goal = s.robot_goal;
    const auto traj = plan(s.robot_start, pred, cfg, s.keepout, s.bound);
    {
      auto f = open_out(fs::path(out) / "trajectory.csv");
      write_trajectory_csv(f, traj);
    }
    {
      auto f = open_out(fs::path(out) / "occupancy.csv");
      write_occupancy(f, pred);
    }
    std::cout << "waypoints=" << traj.size() << " cost=" << format_double(traj.total_cost)
              << " reached_goal=" << (traj.reached_goal ? "true" : "false")
              << " max_pcoll=" << format_double(traj.max_pcoll()) << "\n";
    return kExitOk;
  }
};

struct SimulateCmd {
  ScenarioFlags sc;
  std::string out;
  std::vector<std::string> methods;
  std::optional<std::uint64_t> seed;
  bool states{true};

  int operator()() const {
    std::vector<std::string> extra;
    if (seed) extra.push_back("human.seed=" + std::to_string(*seed));
    const Scenario base = sc.load(extra);
    std::vector<Method> ms;
    for (const auto& m : methods) ms.push_back(Method::parse(m));
    if (ms.empty()) ms.push_back(base.method);
    ensure_dir(out);
    const auto traj = scenario_trajectory(base);
    const std::string label = trajectory_label(base);

    auto metrics = open_out(fs::path(out) / "metrics.csv");
    metrics << kMetricsHeader << '\n';
    nlohmann::json summary = nlohmann::json::array();
    bool timeout = false;
    for (const auto& m : ms) {
      Scenario s = base;
      s.method = m;
      EngineOptions opt;
      opt.record_states = states;
      const auto r = run(s, traj, opt);
      write_metrics_row(metrics, m.label(), label, r);
      summary.push_back(summary_json(m.label(), label, r));
      const std::string tag = file_label(m.label());
      {
        auto f = open_out(fs::path(out) / ("cycles_" + tag + ".csv"));
        write_cycles_csv(f, r);
      }
      {
        auto f = open_out(fs::path(out) / ("human_steps_" + tag + ".csv"));
        write_human_steps_csv(f, r);
      }
      if (states) {
        auto f = open_out(fs::path(out) / ("states_" + tag + ".csv"));
        write_states_csv(f, r);
      }
      std::cout << m.label() << ": min_distance=" << format_double(r.min_ground_distance)
                << " completion_time=" << format_double(r.completion_time)
                << " collision=" << (r.collision_occurred ? "yes" : "no")
                << (r.timed_out ? " TIMEOUT" : "") << "\n";
      timeout = timeout || r.timed_out;
    }
    auto f = open_out(fs::path(out) / "summary.json");
    f << summary.dump(2) << '\n';
    return timeout ? kExitTimeout : kExitOk;
  }
};

struct CompareCmd {
  ScenarioFlags sc;
  std::string out;
  std::vector<std::string> methods{"infer", "fixed:10", "fixed:0.05"};
  int seeds{8};
  std::uint64_t seed_start{0};
  unsigned jobs{std::max(1u, std::thread::hardware_concurrency())};

  int operator()() const {
    const Scenario base = sc.load();
    std::vector<Method> ms;
    for (const auto& m : methods) ms.push_back(Method::parse(m));
    if (ms.size() < 2) throw ConfigError("compare: need at least two methods");
    if (seeds < 1) throw ConfigError("compare: --seeds must be >= 1");
    std::vector<NamedTrajectory> trajs;
    if (base.trajectory_file) {
      trajs.push_back({trajectory_label(base), read_human_trajectory_file(*base.trajectory_file)});
    } else {
      for (int i = 0; i < seeds; ++i) {
        Scenario s = base;
        s.trajectory_seed = seed_start + static_cast<std::uint64_t>(i);
        trajs.push_back({trajectory_label(s), scenario_trajectory(s)});
      }
    }
    const auto table = compare_methods(base, ms, trajs, jobs);
    ensure_dir(out);
    {
      auto f = open_out(fs::path(out) / "runs.csv");
      write_comparison_runs_csv(f, table);
    }
    {
      auto f = open_out(fs::path(out) / "aggregate.csv");
      write_comparison_aggregate_csv(f, table);
    }
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& r : table.rows) summary.push_back(summary_json(r.method, r.trajectory, r.metrics));
    {
      auto f = open_out(fs::path(out) / "summary.json");
      f << summary.dump(2) << '\n';
    }
    bool timeout = false;
    for (const auto& a : table.aggregates) {
      std::cout << a.method << ": min_distance median=" << format_double(a.min_distance.median)
                << " completion_time median=" << format_double(a.completion_time.median)
                << " time_difference median=" << format_double(a.time_difference.median)
                << " collisions=" << a.collisions << " timeouts=" << a.timeouts << "\n";
      timeout = timeout || a.timeouts > 0;
    }
    return timeout ? kExitTimeout : kExitOk;
  }
};

struct GenTrajCmd {
  ScenarioFlags sc;
  std::string out{"-"};
  std::optional<std::string> kind;
  std::optional<std::uint64_t> seed;

  int operator()() const {
    std::vector<std::string> extra;
    if (kind) extra.push_back("human.kind=" + *kind);
    if (seed) extra.push_back("human.seed=" + std::to_string(*seed));
    const Scenario s = sc.load(extra);
    const auto traj = generate_trajectory(s.trajectory_kind, s.trajectory, s.trajectory_seed);
    if (out == "-") {
      write_human_trajectory(std::cout, traj);
    } else {
      auto f = open_out(out);
      write_human_trajectory(f, traj);
    }
    return kExitOk;
  }
};

struct ServeCmd {
  ScenarioFlags sc;
  std::string host{"127.0.0.1"};
  unsigned short port{8765};
  ServerOptions opt;
  std::string mode{"realtime"};

  int operator()() {
    opt.scenario = sc.load();
    opt.session.mode = parse_session_mode(mode);
    WsServer server(host, port, opt);
    std::cout << "listening on ws://" << host << ":" << server.port() << "/ (protocol v" << kProtocolVersion
              << ")" << std::endl;
    server.run();
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confplan: confidence-aware human motion prediction and safe planning"};
  app.footer(kSchemaHelp);
  app.require_subcommand(1);

  PredictCmd predict;
  auto* p = app.add_subcommand("predict", "Write occupancy predictions (one dump per requested time)");
  predict.sc.attach(p);
  p->add_option("--out", predict.out, "Output directory")->required();
  p->add_option("--at", predict.at, "Simulation times (s) at which to predict")->delimiter(',');
  p->add_option("--horizon", predict.horizon, "Prediction horizon in human steps");
  p->add_flag("--verify", predict.verify, "Re-read each dump and check it against the in-memory grids");
  p->footer(kSchemaHelp);

  PlanCmd plan_cmd;
  auto* pl = app.add_subcommand("plan", "Plan once from the robot start against the initial prediction");
  plan_cmd.sc.attach(pl);
  pl->add_option("--out", plan_cmd.out, "Output directory")->required();
  pl->add_option("--horizon", plan_cmd.horizon, "Prediction horizon in human steps");
  pl->footer(kSchemaHelp);

  SimulateCmd simulate;
  auto* s = app.add_subcommand("simulate", "Run the closed loop and write metrics and logs");
  simulate.sc.attach(s);
  s->add_option("--out", simulate.out, "Output directory")->required();
  s->add_option("--method", simulate.methods, "infer | fixed:VALUE (repeat for paired runs)");
  s->add_option("--seed", simulate.seed, "Synthetic trajectory seed");
  s->add_flag("!--no-states", simulate.states, "Skip the per-tick state log");
  s->footer(kSchemaHelp);

  CompareCmd compare;
  auto* c = app.add_subcommand("compare", "Run several methods over seeded trajectories and aggregate");
  compare.sc.attach(c);
  c->add_option("--out", compare.out, "Output directory")->required();
  c->add_option("--methods", compare.methods, "Methods; the first is the time-difference reference")
      ->delimiter(',');
  c->add_option("--seeds", compare.seeds, "Number of synthetic trajectories");
  c->add_option("--seed-start", compare.seed_start, "First trajectory seed");
  c->add_option("--jobs", compare.jobs, "Worker threads")->check(CLI::PositiveNumber);
  c->footer(kSchemaHelp);

  GenTrajCmd gen;
  auto* g = app.add_subcommand("gen-traj", "Write a synthetic human trajectory as t,x,y CSV");
  gen.sc.attach(g);
  g->add_option("--out", gen.out, "Output file ('-' for stdout)");
  g->add_option("--kind", gen.kind, "direct | spill_detour | triangle");
  g->add_option("--seed", gen.seed, "Trajectory seed");
  g->footer(kSchemaHelp);

  ServeCmd serve;
  auto* sv = app.add_subcommand("serve", "Run the live websocket service");
  serve.sc.attach(sv);
  sv->add_option("--host", serve.host, "Listen address");
  sv->add_option("--port", serve.port, "Listen port (0 picks a free port)");
  sv->add_option("--mode", serve.mode, "Default session mode: realtime | scripted");
  sv->add_option("--human-hz", serve.opt.session.human_hz, "Human ticks per second in realtime mode");
  sv->add_option("--top-k", serve.opt.session.top_k, "Occupancy cells per step in state updates (0 = all)");
  sv->add_option("--ping-seconds", serve.opt.ping_seconds, "Heartbeat interval");
  sv->footer(kSchemaHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*p) return predict();
    if (*pl) return plan_cmd();
    if (*s) return simulate();
    if (*c) return compare();
    if (*g) return gen();
    if (*sv) return serve();
  } catch (const PlanError& e) {
    std::cerr << "infeasible plan: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
