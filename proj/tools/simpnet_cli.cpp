#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "simpnet/simpnet.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 planning found no path, 2 usage error, and
// 3 + (simp_status - 1) for library failures (3 invalid argument, 4 invalid
// query, 5 i/o, 6 format, 7 resource exhausted, 8 numeric, 9 internal).
struct Failure {
  int code;
  std::string message;
};

int exit_code(simp_status s) { return s == SIMP_OK ? 0 : 2 + static_cast<int>(s); }

void check(simp_status s, const std::string& what) {
  if (s != SIMP_OK) throw Failure{exit_code(s), what + ": " + simp_status_name(s) + ": " + simp_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using RobotPtr = std::unique_ptr<simp_robot, Deleter<simp_robot, simp_robot_free>>;
using WorldPtr = std::unique_ptr<simp_world, Deleter<simp_world, simp_world_free>>;
using WeightsPtr = std::unique_ptr<simp_weights, Deleter<simp_weights, simp_weights_free>>;
using ResultPtr = std::unique_ptr<simp_plan_result, Deleter<simp_plan_result, simp_plan_result_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  simp_string_free(s);
  return out;
}

struct Globals {
  std::uint64_t seed = 0;
  std::string robot;
  std::string config;
  std::string data_root;
  bool quiet = false;
};

json load_config(const Globals& g) {
  if (g.config.empty()) return json::object();
  std::ifstream in(g.config);
  if (!in) throw Failure{exit_code(SIMP_ERR_IO), "cannot read config file '" + g.config + "'"};
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw Failure{exit_code(SIMP_ERR_FORMAT), "config file must hold a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw Failure{exit_code(SIMP_ERR_FORMAT), "config file '" + g.config + "': " + e.what()};
  }
}

json section(const json& config, const char* name) {
  return config.contains(name) && config[name].is_object() ? config[name] : json::object();
}

std::string data_root(const Globals& g) {
  if (!g.data_root.empty()) return g.data_root;
  if (const char* env = std::getenv("SIMPNET_DATA_ROOT"); env && *env) return env;
  return "data";
}

RobotPtr load_robot(const Globals& g) {
  simp_robot* r = nullptr;
  if (g.robot.empty()) {
    check(simp_robot_default(&r), "robot");
  } else {
    check(simp_robot_load(g.robot.c_str(), &r), "robot '" + g.robot + "'");
  }
  return RobotPtr(r);
}

std::vector<double> parse_joints(const std::string& text, const char* what) {
  std::vector<double> q;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      q.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::logic_error&) {
      throw Failure{2, std::string(what) + ": '" + cell + "' is not a number"};
    }
  }
  if (q.size() != SIMP_DOF) throw Failure{2, std::string(what) + ": expected " + std::to_string(SIMP_DOF) + " angles"};
  return q;
}

void progress_to_stderr(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned-heuristic motion planning toolkit: worlds, data, training, planning and benchmarks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--robot", g.robot, "Robot description file (default: built-in UR5e)");
  app.add_option("--config", g.config, "Run configuration file (JSON)");
  app.add_option("--data-root", g.data_root, "Data directory (default: $SIMPNET_DATA_ROOT, else ./data)");
  app.add_flag("-q,--quiet", g.quiet, "No progress output");

  auto* gen = app.add_subcommand("gen-worlds", "Generate a suite of random workspaces");
  std::string gen_suite, gen_profile = "simple";
  std::size_t gen_count = 10;
  gen->add_option("--suite", gen_suite, "Suite name")->required();
  gen->add_option("--profile", gen_profile, "simple or complex")->capture_default_str();
  gen->add_option("--count", gen_count, "Number of worlds")->capture_default_str();

  auto* collect = app.add_subcommand("collect", "Collect oracle paths and training pairs for a suite");
  std::string collect_suite;
  std::size_t collect_paths = 200;
  std::optional<std::size_t> collect_max_worlds, collect_iterations;
  collect->add_option("--suite", collect_suite, "Suite name")->required();
  collect->add_option("--paths", collect_paths, "Paths per world")->capture_default_str();
  collect->add_option("--max-worlds", collect_max_worlds, "Only the first N worlds of the suite");
  collect->add_option("--oracle-iterations", collect_iterations, "RRT* iterations per oracle query");

  auto* train = app.add_subcommand("train", "Train heuristic weights on collected pairs");
  std::string train_suites, train_out, train_resume, train_checkpoint, train_mode;
  std::optional<std::size_t> train_epochs;
  train->add_option("--suites", train_suites, "Comma-separated suites whose pairs are used")->required();
  train->add_option("--out", train_out, "Output weight file")->required();
  train->add_option("--epochs", train_epochs, "Epoch count");
  train->add_option("--feature-mode", train_mode, "full or relaxed_fk");
  train->add_option("--checkpoint", train_checkpoint, "Checkpoint path written after every epoch");
  train->add_option("--resume", train_resume, "Resume from a checkpoint");

  auto* plan = app.add_subcommand("plan", "Plan a single query");
  std::string plan_world, plan_start, plan_goal, plan_planner = "simpnet", plan_weights, plan_out;
  bool plan_random = false;
  plan->add_option("--world", plan_world, "Workspace file")->required();
  plan->add_option("--start", plan_start, "Start angles, comma-separated radians");
  plan->add_option("--goal", plan_goal, "Goal angles, comma-separated radians");
  plan->add_flag("--random-query", plan_random, "Draw start and goal from the seed");
  plan->add_option("--planner", plan_planner, "rrt, birrt, rrt_star, informed_rrt_star or simpnet")
      ->capture_default_str();
  plan->add_option("--weights", plan_weights, "Heuristic weight file (simpnet)");
  plan->add_option("--out", plan_out, "Write the path file here");

  auto* bench = app.add_subcommand("bench", "Benchmark planners over suites");
  std::string bench_out = "bench", bench_replay;
  bench->add_option("--out", bench_out, "Output directory")->capture_default_str();
  bench->add_option("--replay", bench_replay, "Re-run a bundle directory instead of the configured spec");

  auto* report = app.add_subcommand("report", "Render the report of a bench directory");
  std::string report_dir = "bench";
  report->add_option("--dir", report_dir, "Bench directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (!g.quiet) simp_set_progress(progress_to_stderr, nullptr);

  try {
    const json config = load_config(g);
    const std::string root = data_root(g);

    if (*gen) {
      RobotPtr robot = load_robot(g);
      char* summary = nullptr;
      check(simp_gen_worlds(robot.get(), root.c_str(), gen_suite.c_str(), gen_profile.c_str(), gen_count, g.seed,
                            &summary),
            "gen-worlds");
      std::cout << take(summary) << "\n";
    } else if (*collect) {
      RobotPtr robot = load_robot(g);
      json opts = section(config, "collect");
      if (collect_max_worlds) opts["max_worlds"] = *collect_max_worlds;
      if (collect_iterations) opts["oracle"]["max_iterations"] = *collect_iterations;
      char* summary = nullptr;
      check(simp_collect(robot.get(), root.c_str(), collect_suite.c_str(), collect_paths, g.seed,
                         opts.dump().c_str(), &summary),
            "collect");
      std::cout << take(summary) << "\n";
    } else if (*train) {
      RobotPtr robot = load_robot(g);
      json tc = section(config, "train");
      if (!tc.contains("seed")) tc["seed"] = g.seed;
      if (train_epochs) tc["epochs"] = *train_epochs;
      if (!train_mode.empty()) tc["feature_mode"] = train_mode;
      if (!train_checkpoint.empty()) tc["checkpoint"] = train_checkpoint;
      const json hc = section(config, "heuristic");
      char* report_json = nullptr;
      check(simp_train(robot.get(), root.c_str(), train_suites.c_str(), tc.dump().c_str(), hc.dump().c_str(),
                       train_out.c_str(), train_resume.empty() ? nullptr : train_resume.c_str(), &report_json),
            "train");
      const std::string text = take(report_json);
      std::ofstream(train_out + ".report.json") << text << "\n";
      std::cout << "weights written to " << train_out << " (report: " << train_out << ".report.json)\n";
    } else if (*plan) {
      RobotPtr robot = load_robot(g);
      simp_world* w = nullptr;
      check(simp_world_load(plan_world.c_str(), &w), "world '" + plan_world + "'");
      WorldPtr world(w);
      simp_planner kind;
      check(simp_planner_parse(plan_planner.c_str(), &kind), "planner");
      std::vector<double> start(SIMP_DOF), goal(SIMP_DOF);
      if (plan_random) {
        check(simp_sample_free(world.get(), robot.get(), g.seed, start.data()), "start");
        check(simp_sample_free(world.get(), robot.get(), g.seed + 1, goal.data()), "goal");
      } else {
        if (plan_start.empty() || plan_goal.empty()) throw Failure{2, "plan: give --start and --goal, or --random-query"};
        start = parse_joints(plan_start, "--start");
        goal = parse_joints(plan_goal, "--goal");
      }
      WeightsPtr weights;
      if (!plan_weights.empty()) {
        simp_weights* raw = nullptr;
        check(simp_weights_load(plan_weights.c_str(), &raw), "weights '" + plan_weights + "'");
        weights.reset(raw);
      }
      const json params = section(config, "planner");
      simp_plan_result* raw = nullptr;
      check(simp_plan(world.get(), robot.get(), kind, start.data(), goal.data(), weights.get(), params.dump().c_str(),
                      g.seed, &raw),
            "plan");
      ResultPtr result(raw);
      const bool ok = simp_plan_result_success(result.get()) != 0;
      json summary = {{"planner", simp_planner_name(kind)},
                      {"success", ok},
                      {"waypoints", simp_plan_result_waypoint_count(result.get())},
                      {"cost", simp_plan_result_cost(result.get())},
                      {"wall_time", simp_plan_result_wall_time(result.get())},
                      {"iterations", simp_plan_result_iterations(result.get())},
                      {"seed", g.seed}};
      if (ok && !plan_out.empty()) {
        check(simp_plan_result_save(result.get(), plan_out.c_str()), "save path");
        summary["path_file"] = plan_out;
      }
      std::cout << summary.dump(1) << "\n";
      return ok ? 0 : 1;
    } else if (*bench) {
      char* summary = nullptr;
      if (!bench_replay.empty()) {
        check(simp_bench_replay(bench_replay.c_str(), bench_out.c_str(), &summary), "bench replay");
      } else {
        RobotPtr robot = load_robot(g);
        json spec = section(config, "bench");
        if (!spec.contains("suites") || !spec.contains("planners"))
          throw Failure{2, "bench: the config file needs a \"bench\" section with suites and planners"};
        if (!spec.contains("seed")) spec["seed"] = g.seed;
        check(simp_bench(robot.get(), root.c_str(), spec.dump().c_str(), bench_out.c_str(), &summary), "bench");
      }
      take(summary);
      char* md = nullptr;
      check(simp_report(bench_out.c_str(), &md), "report");
      std::cout << take(md);
    } else if (*report) {
      char* md = nullptr;
      check(simp_report(report_dir.c_str(), &md), "report");
      std::cout << take(md);
    }
  } catch (const Failure& f) {
    std::cerr << "simpnet: " << f.message << "\n";
    return f.code;
  }
  return 0;
}
