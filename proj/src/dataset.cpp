#include "simpnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <numbers>
#include <optional>
#include <thread>

#include "simpnet/error.hpp"

namespace simpnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBaseMargin = 0.05;
constexpr std::size_t kMaxWorldAttempts = 1000;

Point3 around_base(Rng& rng, double r_lo, double r_hi, double z) {
  const double r = rng.uniform(r_lo, r_hi);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return Point3(r * std::cos(phi), r * std::sin(phi), z);
}

bool clear_of_base(const BoxObstacle& box, const KinematicModel& model) {
  const FrameSet frames = forward_kinematics(model, JointVector{});
  return segment_box_distance(frames.positions[0], frames.positions[1], box) > model.link_radii()[0] + kBaseMargin;
}

std::vector<BoxObstacle> simple_layout(Rng& rng, const KinematicModel& model) {
  std::vector<BoxObstacle> boxes;
  const std::size_t count = 3 + rng.below(3);
  while (boxes.size() < count) {
    const Point3 dims(rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3));
    const BoxObstacle box{around_base(rng, 0.3, 0.8, rng.uniform(0.0, 0.8)), dims};
    if (clear_of_base(box, model)) boxes.push_back(box);
  }
  return boxes;
}

std::vector<BoxObstacle> complex_layout(Rng& rng, const KinematicModel& model) {
  const double clearance = model.link_radii()[0] + 0.01;
  const double table_top = -clearance;
  const double table_thickness = 0.06;
  std::vector<BoxObstacle> boxes{
      {Point3(0.0, 0.0, table_top - table_thickness / 2), Point3(1.6, 1.6, table_thickness)}};
  const std::size_t count = 6 + rng.below(4);
  while (boxes.size() < count + 1) {
    BoxObstacle box;
    if (rng.bernoulli(0.5)) {
      const double height = rng.uniform(0.5, 0.9);
      const Point3 c = around_base(rng, 0.35, 0.8, table_top + height / 2);
      box = {c, Point3(rng.uniform(0.06, 0.1), rng.uniform(0.06, 0.1), height)};
    } else {
      const bool along_x = rng.bernoulli(0.5);
      const double length = rng.uniform(0.3, 0.5), depth = rng.uniform(0.2, 0.35);
      const Point3 c = around_base(rng, 0.45, 0.8, rng.uniform(0.25, 0.75));
      box = {c, along_x ? Point3(length, depth, 0.03) : Point3(depth, length, 0.03)};
    }
    if (clear_of_base(box, model)) boxes.push_back(box);
  }
  return boxes;
}

JointVector uniform_config(const KinematicModel& model, Rng& rng) {
  JointVector q;
  for (std::size_t i = 0; i < kNumJoints; ++i) q[i] = rng.uniform(model.limits()[i].lo, model.limits()[i].hi);
  return q;
}

bool sound(const Path& path, const Workspace& ws, const KinematicModel& model, const MotionCheckParams& motion) {
  if (!path_valid(path, ws, model, motion)) return false;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!discrete_motion_valid(ws, model, path[i], path[i + 1], motion.step / 2)) return false;
  return true;
}

std::optional<PathRecord> collect_one(const Workspace& ws, const KinematicModel& model, const CollectParams& params,
                                      std::uint64_t attempt_seed) {
  Rng rng(attempt_seed);
  const JointVector start = sample_free_config(ws, model, rng);
  const JointVector goal = sample_free_config(ws, model, rng);
  if (start == goal) return std::nullopt;
  PlannerParams oracle = params.oracle;
  oracle.seed = rng.next();
  const PlanResult r = rrt_star_plan(ws, model, start, goal, oracle);
  if (!r.success) return std::nullopt;
  Path p = densify(lazy_path_contraction(r.path, ws, model, oracle.motion), params.waypoint_spacing);
  if (!sound(p, ws, model, oracle.motion)) return std::nullopt;
  PathRecord rec;
  rec.robot_id = model.name();
  rec.workspace_id = ws.id();
  rec.planner = planner_name(PlannerKind::rrt_star);
  rec.seed = oracle.seed;
  rec.cost = path_cost(p);
  rec.waypoints = std::move(p);
  return rec;
}

}  // namespace

Workspace generate_world(Profile profile, Rng& rng, const KinematicModel& model, const std::string& id) {
  for (std::size_t attempt = 0; attempt < kMaxWorldAttempts; ++attempt) {
    std::vector<BoxObstacle> boxes =
        profile == Profile::simple ? simple_layout(rng, model) : complex_layout(rng, model);
    Workspace ws(id, profile, Workspace::default_bounds(), std::move(boxes));
    for (std::size_t k = 0; k < kWorldProbeCount; ++k)
      if (!config_in_collision(ws, model, uniform_config(model, rng))) return ws;
  }
  throw ResourceExhausted("generate_world: no layout with free space after " + std::to_string(kMaxWorldAttempts) +
                          " attempts");
}

WorldSuite generate_suite(const std::string& name, Profile profile, std::size_t count, std::uint64_t seed,
                          const KinematicModel& model) {
  if (name.empty()) throw InvalidArgument("suite name must not be empty");
  WorldSuite suite{name, profile, seed, {}};
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(Rng::derive(seed, {i}));
    char id[32];
    std::snprintf(id, sizeof id, "%02zu", i);
    suite.worlds.push_back(generate_world(profile, rng, model, name + "-" + id));
  }
  return suite;
}

JointVector sample_free_config(const Workspace& ws, const KinematicModel& model, Rng& rng) {
  for (std::size_t k = 0; k < kMaxFreeRejections; ++k) {
    const JointVector q = uniform_config(model, rng);
    if (!config_in_collision(ws, model, q)) return q;
  }
  throw ResourceExhausted("no collision-free configuration in workspace '" + ws.id() + "' after " +
                          std::to_string(kMaxFreeRejections) + " draws");
}

std::vector<Query> generate_queries(const Workspace& ws, const KinematicModel& model, std::size_t count,
                                    std::uint64_t seed) {
  std::vector<Query> out;
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(Rng::derive(seed, {k}));
    Query q{sample_free_config(ws, model, rng), sample_free_config(ws, model, rng)};
    out.push_back(q);
  }
  return out;
}

CollectParams CollectParams::defaults() {
  CollectParams p;
  p.oracle.max_iterations = 5000;
  return p;
}

Path densify(const Path& path, double spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("densify: spacing must be positive");
  if (path.empty()) return path;
  Path out{path.front()};
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const JointVector& a = path[i];
    const JointVector& b = path[i + 1];
    const auto pieces = static_cast<std::size_t>(std::ceil(distance(a, b) / spacing));
    for (std::size_t s = 1; s < pieces; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(pieces);
      JointVector q;
      for (std::size_t k = 0; k < kNumJoints; ++k) q[k] = a[k] + t * (b[k] - a[k]);
      out.push_back(q);
    }
    out.push_back(b);
  }
  return out;
}

std::vector<PathRecord> collect_paths(const Workspace& ws, const KinematicModel& model, std::size_t n,
                                      const CollectParams& params, std::uint64_t seed,
                                      const std::function<void(std::size_t, std::size_t)>& progress) {
  if (n == 0) throw InvalidArgument("collect_paths: n must be at least 1");
  params.oracle.validate();
  if (params.abort_window == 0) throw InvalidArgument("collect_paths: abort_window must be positive");
  const std::size_t workers =
      params.workers > 0 ? params.workers : std::max<std::size_t>(1, std::thread::hardware_concurrency());

  std::vector<PathRecord> out;
  std::deque<bool> window;
  std::size_t window_successes = 0;
  std::size_t next_attempt = 0;
  while (out.size() < n) {
    std::vector<std::optional<PathRecord>> results(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&](std::size_t slot) {
      try {
        results[slot] = collect_one(ws, model, params, Rng::derive(seed, {next_attempt + slot}));
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    };
    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::jthread> threads;
      for (std::size_t s = 0; s < workers; ++s) threads.emplace_back(run, s);
    }
    for (std::size_t s = 0; s < workers && out.size() < n; ++s) {
      if (errors[s]) std::rethrow_exception(errors[s]);
      const bool ok = results[s].has_value();
      if (ok) out.push_back(std::move(*results[s]));
      window.push_back(ok);
      window_successes += ok;
      if (window.size() > params.abort_window) {
        window_successes -= window.front();
        window.pop_front();
      }
      if (window.size() == params.abort_window &&
          static_cast<double>(window_successes) < params.min_success_rate * static_cast<double>(params.abort_window))
        throw ResourceExhausted("oracle succeeded on " + std::to_string(window_successes) + " of the last " +
                                std::to_string(params.abort_window) + " queries in workspace '" + ws.id() +
                                "'; giving up");
      if (progress) progress(out.size(), next_attempt + s + 1);
    }
    next_attempt += workers;
  }
  return out;
}

std::vector<TrainingPair> make_training_pairs(const std::vector<PathRecord>& paths) {
  std::vector<TrainingPair> pairs;
  for (const PathRecord& rec : paths) {
    const Path& p = rec.waypoints;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) pairs.push_back({rec.workspace_id, p[i], p.back(), p[i + 1]});
  }
  return pairs;
}

json pairs_to_json(const std::vector<TrainingPair>& pairs) {
  json arr = json::array();
  for (const TrainingPair& p : pairs)
    arr.push_back({{"workspace", p.workspace_id},
                   {"q_t", joint_vector_to_json(p.q_t)},
                   {"q_goal", joint_vector_to_json(p.q_goal)},
                   {"target", joint_vector_to_json(p.target)}});
  return {{"format", "simpnet-pairs"}, {"version", 1}, {"pairs", arr}};
}

std::vector<TrainingPair> pairs_from_json(const json& j) {
  expect_document(j, "simpnet-pairs", 1);
  try {
    std::vector<TrainingPair> out;
    for (const json& p : j.at("pairs"))
      out.push_back({p.at("workspace").get<std::string>(), joint_vector_from_json(p.at("q_t")),
                     joint_vector_from_json(p.at("q_goal")), joint_vector_from_json(p.at("target"))});
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("pairs file: ") + e.what());
  }
}

void save_pairs(const fs::path& path, const std::vector<TrainingPair>& pairs) {
  write_json_atomic(path, pairs_to_json(pairs));
}

std::vector<TrainingPair> load_pairs(const fs::path& path) { return pairs_from_json(read_json_file(path)); }

fs::path DataRoot::world_file(const std::string& suite, const std::string& id) const {
  return world_dir(suite) / (id + ".json");
}

fs::path DataRoot::path_dir(const std::string& suite, const std::string& world_id) const {
  return root_ / "paths" / suite / world_id;
}

fs::path DataRoot::path_file(const std::string& suite, const std::string& world_id, std::size_t k) const {
  return path_dir(suite, world_id) / (std::to_string(k) + ".json");
}

fs::path DataRoot::pairs_file(const std::string& suite) const { return root_ / "pairs" / (suite + ".json"); }

void DataRoot::save_suite(const WorldSuite& suite) const {
  for (const Workspace& ws : suite.worlds) save_workspace(world_file(suite.name, ws.id()), ws);
}

std::vector<Workspace> DataRoot::load_worlds(const std::string& suite) const {
  const fs::path dir = world_dir(suite);
  if (!fs::is_directory(dir)) throw IoError("no worlds for suite '" + suite + "' under '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Workspace> worlds;
  for (const fs::path& f : files) worlds.push_back(load_workspace(f));
  if (worlds.empty()) throw IoError("suite '" + suite + "' has no world files");
  return worlds;
}

PathRecord DataRoot::load_path(const std::string& suite, const Workspace& ws, const KinematicModel& model,
                               std::size_t k) const {
  const fs::path file = path_file(suite, ws.id(), k);
  PathRecord rec = path_from_json(read_json_file(file));
  if (rec.workspace_id != ws.id())
    throw FormatError("'" + file.string() + "' belongs to workspace '" + rec.workspace_id + "'");
  if (rec.waypoints.empty() || !path_valid(rec.waypoints, ws, model))
    throw FormatError("'" + file.string() + "' is not a valid path in workspace '" + ws.id() + "'");
  return rec;
}

std::vector<PathRecord> DataRoot::load_paths(const std::string& suite, const Workspace& ws,
                                             const KinematicModel& model) const {
  std::vector<PathRecord> out;
  for (std::size_t k = 0; fs::exists(path_file(suite, ws.id(), k)); ++k) out.push_back(load_path(suite, ws, model, k));
  return out;
}

}  // namespace simpnet
