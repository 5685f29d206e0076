#include "simpnet/simpnet.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <optional>
#include <sstream>

#include "simpnet/bench.hpp"
#include "simpnet/dataset.hpp"
#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"
#include "simpnet/training.hpp"

using namespace simpnet;
using nlohmann::json;
namespace fs = std::filesystem;

struct simp_robot {
  KinematicModel model;
};

struct simp_world {
  Workspace ws;
};

struct simp_weights {
  HeuristicWeights weights;
};

struct simp_plan_result {
  PlanResult result;
  std::string robot_id;
  std::string workspace_id;
  std::string planner;
  std::uint64_t seed = 0;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_progress_mutex;
simp_progress_fn g_progress = nullptr;
void* g_progress_user = nullptr;

void report_progress(const std::string& message) {
  std::lock_guard lock(g_progress_mutex);
  if (g_progress) g_progress(message.c_str(), g_progress_user);
}

simp_status fail(simp_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
simp_status guard(F f) {
  try {
    f();
    g_last_error.clear();
    return SIMP_OK;
  } catch (const InvalidQuery& e) {
    return fail(SIMP_ERR_INVALID_QUERY, e.what());
  } catch (const InvalidArgument& e) {
    return fail(SIMP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const IoError& e) {
    return fail(SIMP_ERR_IO, e.what());
  } catch (const FormatError& e) {
    return fail(SIMP_ERR_FORMAT, e.what());
  } catch (const ResourceExhausted& e) {
    return fail(SIMP_ERR_RESOURCE_EXHAUSTED, e.what());
  } catch (const NumericError& e) {
    return fail(SIMP_ERR_NUMERIC, e.what());
  } catch (const json::exception& e) {
    return fail(SIMP_ERR_FORMAT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SIMP_ERR_RESOURCE_EXHAUSTED, "out of memory");
  } catch (const std::exception& e) {
    return fail(SIMP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SIMP_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " must not be NULL");
}

JointVector joints(const double* q, const char* what) {
  require(q, what);
  JointVector out;
  std::copy(q, q + kNumJoints, out.begin());
  return out;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

json parse_options(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw InvalidArgument("options must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("options are not valid JSON: ") + e.what());
  }
}

std::vector<std::string> split_names(const char* text) {
  require(text, "suites");
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ','))
    if (!name.empty()) out.push_back(name);
  if (out.empty()) throw InvalidArgument("no suite names given");
  return out;
}

}  // namespace

extern "C" {

const char* simp_version(void) { return "0.1.0"; }

const char* simp_status_name(simp_status status) {
  switch (status) {
    case SIMP_OK: return "ok";
    case SIMP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SIMP_ERR_INVALID_QUERY: return "invalid query";
    case SIMP_ERR_IO: return "i/o error";
    case SIMP_ERR_FORMAT: return "format error";
    case SIMP_ERR_RESOURCE_EXHAUSTED: return "resource exhausted";
    case SIMP_ERR_NUMERIC: return "numeric error";
    case SIMP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* simp_last_error(void) { return g_last_error.c_str(); }

void simp_string_free(char* s) { std::free(s); }

void simp_set_progress(simp_progress_fn fn, void* user) {
  std::lock_guard lock(g_progress_mutex);
  g_progress = fn;
  g_progress_user = user;
}

// --- robot ----------------------------------------------------------------

simp_status simp_robot_default(simp_robot** out) {
  return guard([&] {
    require(out, "out");
    *out = new simp_robot{KinematicModel::ur5e()};
  });
}

simp_status simp_robot_load(const char* path, simp_robot** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new simp_robot{load_robot(path)};
  });
}

simp_status simp_robot_save(const simp_robot* robot, const char* path) {
  return guard([&] {
    require(robot, "robot");
    require(path, "path");
    write_json_atomic(path, robot_to_json(robot->model));
  });
}

void simp_robot_free(simp_robot* robot) { delete robot; }

simp_status simp_robot_fk(const simp_robot* robot, const double q[SIMP_DOF], double positions[3 * SIMP_FRAME_COUNT]) {
  return guard([&] {
    require(robot, "robot");
    require(positions, "positions");
    const FrameSet frames = forward_kinematics(robot->model, joints(q, "q"));
    for (std::size_t i = 0; i < frames.positions.size(); ++i)
      for (int k = 0; k < 3; ++k) positions[3 * i + static_cast<std::size_t>(k)] = frames.positions[i][k];
  });
}

// --- worlds ---------------------------------------------------------------

simp_status simp_world_empty(const char* profile, simp_world** out) {
  return guard([&] {
    require(profile, "profile");
    require(out, "out");
    *out = new simp_world{Workspace::empty(parse_profile(profile))};
  });
}

simp_status simp_world_generate(const simp_robot* robot, const char* profile, uint64_t seed, const char* id,
                                simp_world** out) {
  return guard([&] {
    require(robot, "robot");
    require(profile, "profile");
    require(out, "out");
    Rng rng(seed);
    *out = new simp_world{generate_world(parse_profile(profile), rng, robot->model, id ? id : "world")};
  });
}

simp_status simp_world_load(const char* path, simp_world** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new simp_world{load_workspace(path)};
  });
}

simp_status simp_world_save(const simp_world* world, const char* path) {
  return guard([&] {
    require(world, "world");
    require(path, "path");
    save_workspace(path, world->ws);
  });
}

void simp_world_free(simp_world* world) { delete world; }

simp_status simp_world_obstacle_count(const simp_world* world, size_t* out) {
  return guard([&] {
    require(world, "world");
    require(out, "out");
    *out = world->ws.obstacles().size();
  });
}

simp_status simp_world_in_collision(const simp_world* world, const simp_robot* robot, const double q[SIMP_DOF],
                                    int* out) {
  return guard([&] {
    require(world, "world");
    require(robot, "robot");
    require(out, "out");
    *out = config_in_collision(world->ws, robot->model, joints(q, "q")) ? 1 : 0;
  });
}

simp_status simp_world_clearance(const simp_world* world, const simp_robot* robot, const double q[SIMP_DOF],
                                 double* out) {
  return guard([&] {
    require(world, "world");
    require(robot, "robot");
    require(out, "out");
    *out = clearance(world->ws, robot->model, joints(q, "q"));
  });
}

simp_status simp_motion_valid(const simp_world* world, const simp_robot* robot, const double a[SIMP_DOF],
                              const double b[SIMP_DOF], int* out) {
  return guard([&] {
    require(world, "world");
    require(robot, "robot");
    require(out, "out");
    *out = motion_valid(world->ws, robot->model, joints(a, "a"), joints(b, "b")) ? 1 : 0;
  });
}

simp_status simp_sample_free(const simp_world* world, const simp_robot* robot, uint64_t seed, double q[SIMP_DOF]) {
  return guard([&] {
    require(world, "world");
    require(robot, "robot");
    require(q, "q");
    Rng rng(seed);
    const JointVector s = sample_free_config(world->ws, robot->model, rng);
    std::copy(s.begin(), s.end(), q);
  });
}

// --- weights --------------------------------------------------------------

simp_status simp_weights_init(const char* feature_mode, size_t obstacle_capacity, uint64_t seed,
                              simp_weights** out) {
  return guard([&] {
    require(out, "out");
    const FeatureMode mode = parse_feature_mode(feature_mode ? feature_mode : "full");
    *out = new simp_weights{HeuristicWeights(HeuristicConfig::defaults(mode, obstacle_capacity), seed)};
  });
}

simp_status simp_weights_load(const char* path, simp_weights** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new simp_weights{HeuristicWeights::load(path)};
  });
}

simp_status simp_weights_save(const simp_weights* weights, const char* path) {
  return guard([&] {
    require(weights, "weights");
    require(path, "path");
    weights->weights.save(path);
  });
}

void simp_weights_free(simp_weights* weights) { delete weights; }

// --- planning -------------------------------------------------------------

simp_status simp_planner_parse(const char* name, simp_planner* out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    *out = static_cast<simp_planner>(parse_planner(name));
  });
}

const char* simp_planner_name(simp_planner planner) {
  if (planner < SIMP_PLANNER_RRT || planner > SIMP_PLANNER_SIMPNET) return "unknown";
  return planner_name(static_cast<PlannerKind>(planner));
}

simp_status simp_plan(const simp_world* world, const simp_robot* robot, simp_planner planner,
                      const double start[SIMP_DOF], const double goal[SIMP_DOF], const simp_weights* weights,
                      const char* params_json, uint64_t seed, simp_plan_result** out) {
  return guard([&] {
    require(world, "world");
    require(robot, "robot");
    require(out, "out");
    if (planner < SIMP_PLANNER_RRT || planner > SIMP_PLANNER_SIMPNET) throw InvalidArgument("unknown planner");
    const auto kind = static_cast<PlannerKind>(planner);
    if (kind == PlannerKind::simpnet && weights == nullptr)
      throw InvalidArgument("the simpnet planner needs heuristic weights");
    PlannerParams params = planner_params_from_json(parse_options(params_json));
    params.seed = seed;
    auto r = std::make_unique<simp_plan_result>();
    r->result = plan(kind, world->ws, robot->model, joints(start, "start"), joints(goal, "goal"), params,
                     weights ? &weights->weights : nullptr);
    r->robot_id = robot->model.name();
    r->workspace_id = world->ws.id();
    r->planner = planner_name(kind);
    r->seed = seed;
    *out = r.release();
  });
}

int simp_plan_result_success(const simp_plan_result* result) { return result && result->result.success ? 1 : 0; }

size_t simp_plan_result_waypoint_count(const simp_plan_result* result) {
  return result ? result->result.path.size() : 0;
}

simp_status simp_plan_result_waypoint(const simp_plan_result* result, size_t index, double q[SIMP_DOF]) {
  return guard([&] {
    require(result, "result");
    require(q, "q");
    if (index >= result->result.path.size()) throw InvalidArgument("waypoint index out of range");
    std::copy(result->result.path[index].begin(), result->result.path[index].end(), q);
  });
}

double simp_plan_result_cost(const simp_plan_result* result) { return result ? result->result.cost : 0.0; }

double simp_plan_result_wall_time(const simp_plan_result* result) { return result ? result->result.wall_time : 0.0; }

size_t simp_plan_result_iterations(const simp_plan_result* result) {
  return result ? result->result.iterations_used : 0;
}

simp_status simp_plan_result_save(const simp_plan_result* result, const char* path) {
  return guard([&] {
    require(result, "result");
    require(path, "path");
    if (!result->result.success) throw InvalidArgument("cannot save an unsuccessful plan");
    PathRecord rec{result->robot_id, result->workspace_id, result->planner, result->seed, result->result.cost,
                   result->result.path};
    write_json_atomic(path, path_to_json(rec));
  });
}

void simp_plan_result_free(simp_plan_result* result) { delete result; }

simp_status simp_path_cost(const double* waypoints, size_t count, double* out) {
  return guard([&] {
    require(waypoints, "waypoints");
    require(out, "out");
    Path p(count);
    for (std::size_t i = 0; i < count; ++i) std::copy(waypoints + i * kNumJoints, waypoints + (i + 1) * kNumJoints, p[i].begin());
    *out = path_cost(p);
  });
}

// --- pipeline -------------------------------------------------------------

simp_status simp_gen_worlds(const simp_robot* robot, const char* data_root, const char* suite, const char* profile,
                            size_t count, uint64_t seed, char** summary_json) {
  return guard([&] {
    require(robot, "robot");
    require(data_root, "data_root");
    require(suite, "suite");
    require(profile, "profile");
    if (count == 0) throw InvalidArgument("count must be at least 1");
    const WorldSuite ws = generate_suite(suite, parse_profile(profile), count, seed, robot->model);
    const DataRoot root(data_root);
    root.save_suite(ws);
    json ids = json::array();
    for (const Workspace& w : ws.worlds) ids.push_back({{"id", w.id()}, {"obstacles", w.obstacles().size()}});
    emit(summary_json, json{{"suite", suite},
                            {"profile", profile},
                            {"seed", seed},
                            {"directory", root.world_dir(suite).string()},
                            {"worlds", ids}}
                           .dump(1));
  });
}

simp_status simp_collect(const simp_robot* robot, const char* data_root, const char* suite, size_t paths_per_world,
                         uint64_t seed, const char* options_json, char** summary_json) {
  return guard([&] {
    require(robot, "robot");
    require(data_root, "data_root");
    require(suite, "suite");
    if (paths_per_world == 0) throw InvalidArgument("paths_per_world must be at least 1");
    const json opts = parse_options(options_json);
    CollectParams params = CollectParams::defaults();
    if (opts.contains("oracle")) params.oracle = planner_params_from_json(opts["oracle"], params.oracle);
    params.waypoint_spacing = opts.value("waypoint_spacing", params.waypoint_spacing);
    params.abort_window = opts.value("abort_window", params.abort_window);
    params.min_success_rate = opts.value("min_success_rate", params.min_success_rate);
    params.workers = opts.value("workers", params.workers);
    const std::size_t max_worlds = opts.value("max_worlds", std::size_t{0});

    const DataRoot root(data_root);
    std::vector<Workspace> worlds = root.load_worlds(suite);
    if (max_worlds > 0 && worlds.size() > max_worlds) worlds.erase(worlds.begin() + static_cast<std::ptrdiff_t>(max_worlds), worlds.end());
    std::vector<PathRecord> all;
    json per_world = json::array();
    for (std::size_t i = 0; i < worlds.size(); ++i) {
      const Workspace& ws = worlds[i];
      report_progress("collecting " + std::to_string(paths_per_world) + " paths in " + ws.id());
      std::size_t attempts = 0;
      auto paths = collect_paths(ws, robot->model, paths_per_world, params, Rng::derive(seed, {i}),
                                 [&](std::size_t, std::size_t a) { attempts = a; });
      std::error_code ec;
      fs::remove_all(root.path_dir(suite, ws.id()), ec);
      for (std::size_t k = 0; k < paths.size(); ++k)
        write_json_atomic(root.path_file(suite, ws.id(), k), path_to_json(paths[k]));
      per_world.push_back({{"id", ws.id()}, {"paths", paths.size()}, {"attempts", attempts}});
      all.insert(all.end(), std::make_move_iterator(paths.begin()), std::make_move_iterator(paths.end()));
    }
    const auto pairs = make_training_pairs(all);
    save_pairs(root.pairs_file(suite), pairs);
    emit(summary_json, json{{"suite", suite},
                            {"seed", seed},
                            {"paths", all.size()},
                            {"pairs", pairs.size()},
                            {"pairs_file", root.pairs_file(suite).string()},
                            {"worlds", per_world}}
                           .dump(1));
  });
}

simp_status simp_train(const simp_robot* robot, const char* data_root, const char* suites,
                       const char* train_config_json, const char* heuristic_json, const char* out_path,
                       const char* resume_path, char** report_json) {
  return guard([&] {
    require(robot, "robot");
    require(data_root, "data_root");
    require(out_path, "out_path");
    const json tc = parse_options(train_config_json);
    const TrainConfig config = train_config_from_json(tc);
    const DataRoot root(data_root);
    std::vector<TrainingPair> pairs;
    std::vector<Workspace> worlds;
    for (const std::string& suite : split_names(suites)) {
      auto p = load_pairs(root.pairs_file(suite));
      pairs.insert(pairs.end(), p.begin(), p.end());
      auto w = root.load_worlds(suite);
      worlds.insert(worlds.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    if (pairs.empty()) throw InvalidArgument("no training pairs in the given suites");
    const json hj = parse_options(heuristic_json);
    json merged = hj;
    merged["feature_mode"] = feature_mode_name(config.feature_mode);
    if (!merged.contains("obstacle_capacity")) merged["obstacle_capacity"] = worlds.front().capacity();
    const HeuristicConfig heuristic = heuristic_config_from_json(merged);

    TrainOptions options;
    if (tc.contains("checkpoint")) options.checkpoint = fs::path(tc["checkpoint"].get<std::string>());
    if (resume_path != nullptr && *resume_path != '\0') options.resume = fs::path(resume_path);
    options.on_epoch = [](std::size_t epoch, double train_loss, double val_loss) {
      char line[128];
      std::snprintf(line, sizeof line, "epoch %zu  train %.6f  val %.6f", epoch, train_loss, val_loss);
      report_progress(line);
    };
    TrainResult result = train(pairs, worlds, robot->model, config, heuristic, options);
    result.weights.save(out_path);
    json report = train_report_to_json(result.report);
    report["pairs"] = pairs.size();
    report["config"] = train_config_to_json(config);
    report["weights"] = out_path;
    emit(report_json, report.dump(1));
  });
}

simp_status simp_bench(const simp_robot* robot, const char* data_root, const char* spec_json, const char* out_dir,
                       char** summary_json) {
  return guard([&] {
    require(robot, "robot");
    require(data_root, "data_root");
    require(out_dir, "out_dir");
    const json j = parse_options(spec_json);
    BenchSpec spec = BenchSpec::defaults();
    const DataRoot root(data_root);
    const std::size_t max_worlds = j.value("max_worlds", std::size_t{0});
    for (const json& s : j.at("suites")) {
      BenchSuite suite{s.get<std::string>(), root.load_worlds(s.get<std::string>())};
      if (max_worlds > 0 && suite.worlds.size() > max_worlds)
        suite.worlds.erase(suite.worlds.begin() + static_cast<std::ptrdiff_t>(max_worlds), suite.worlds.end());
      spec.suites.push_back(std::move(suite));
    }
    for (const json& p : j.at("planners")) {
      BenchPlanner bp;
      bp.kind = parse_planner(p.at("planner").get<std::string>());
      bp.label = p.value("label", std::string(planner_name(bp.kind)));
      if (p.contains("weights") && !p["weights"].is_null()) bp.weights = p["weights"].get<std::string>();
      spec.planners.push_back(bp);
    }
    spec.queries_per_world = j.value("queries_per_world", spec.queries_per_world);
    spec.seed = j.value("seed", spec.seed);
    spec.fixed_budget = j.value("fixed_budget", spec.fixed_budget);
    spec.workers = j.value("workers", spec.workers);
    if (j.contains("classical")) spec.classical = planner_params_from_json(j["classical"], spec.classical);
    if (j.contains("neural")) spec.neural = planner_params_from_json(j["neural"], spec.neural);
    const BenchReport report = run_bench(spec, robot->model, out_dir, [](const std::string& planner,
                                                                         const std::string& suite, std::size_t,
                                                                         std::size_t total) {
      report_progress(planner + " on " + suite + ": " + std::to_string(total) + " queries done");
    });
    json rows = json::array();
    for (const BenchRow& r : report.rows)
      rows.push_back({{"planner", r.planner},
                      {"suite", r.suite},
                      {"success_pct", r.success_pct()},
                      {"mean_time", r.mean_time},
                      {"mean_cost", std::isnan(r.mean_cost) ? json(nullptr) : json(r.mean_cost)},
                      {"budget", r.budget}});
    emit(summary_json, json{{"out_dir", out_dir}, {"rows", rows}}.dump(1));
  });
}

simp_status simp_bench_replay(const char* bundle_dir, const char* out_dir, char** summary_json) {
  return guard([&] {
    require(bundle_dir, "bundle_dir");
    require(out_dir, "out_dir");
    const BenchReport report = replay_bench(bundle_dir, out_dir);
    emit(summary_json, json{{"out_dir", out_dir}, {"rows", report.rows.size()}}.dump(1));
  });
}

simp_status simp_report(const char* bench_dir, char** markdown) {
  return guard([&] {
    require(bench_dir, "bench_dir");
    require(markdown, "markdown");
    *markdown = dup_string(render_report(load_bench_rows(bench_dir)));
  });
}

}  // extern "C"
