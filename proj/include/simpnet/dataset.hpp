#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "simpnet/formats.hpp"
#include "simpnet/planners.hpp"

namespace simpnet {

/// Configurations drawn to check that a generated world leaves free space.
inline constexpr std::size_t kWorldProbeCount = 100;
inline constexpr std::size_t kMaxFreeRejections = 10000;

/// Simple: 3-5 boxes with edges of 0.1-0.3 m scattered around the arm.
/// Complex: a table slab under the base plus 6-9 shelves and pillars.
/// Resampled until some of kWorldProbeCount random configurations are free.
Workspace generate_world(Profile profile, Rng& rng, const KinematicModel& model, const std::string& id);

struct WorldSuite {
  std::string name;
  Profile profile = Profile::simple;
  std::uint64_t seed = 0;
  std::vector<Workspace> worlds;
};

/// World i is generated from Rng::derive(seed, {i}) and named "<name>-<i>".
WorldSuite generate_suite(const std::string& name, Profile profile, std::size_t count, std::uint64_t seed,
                          const KinematicModel& model);

/// Uniform over the joint limits, rejecting colliding draws; throws
/// ResourceExhausted after kMaxFreeRejections rejections.
JointVector sample_free_config(const Workspace& ws, const KinematicModel& model, Rng& rng);

struct Query {
  JointVector start{};
  JointVector goal{};
};

/// count collision-free (start, goal) pairs; query k uses Rng::derive(seed, {k}).
std::vector<Query> generate_queries(const Workspace& ws, const KinematicModel& model, std::size_t count,
                                    std::uint64_t seed);

struct CollectParams {
  PlannerParams oracle;
  /// Stored paths are contracted, then subdivided so no segment exceeds this (radians).
  double waypoint_spacing = 0.5;
  /// Abort when fewer than min_success_rate of the last abort_window attempts succeeded.
  std::size_t abort_window = 200;
  double min_success_rate = 0.01;
  /// 0 picks the hardware concurrency.
  std::size_t workers = 0;

  static CollectParams defaults();
};

/// Subdivides every segment into equal pieces no longer than spacing.
Path densify(const Path& path, double spacing);

/// n oracle paths between random free pairs; attempt k draws its query and
/// oracle seed from Rng::derive(seed, {k}), and failed attempts are redrawn.
/// The result depends only on the inputs, never on the worker count.
std::vector<PathRecord> collect_paths(const Workspace& ws, const KinematicModel& model, std::size_t n,
                                      const CollectParams& params, std::uint64_t seed,
                                      const std::function<void(std::size_t, std::size_t)>& progress = {});

struct TrainingPair {
  std::string workspace_id;
  JointVector q_t{};
  JointVector q_goal{};
  JointVector target{};
};

/// Each path of m waypoints yields m - 1 pairs aimed at its final waypoint.
std::vector<TrainingPair> make_training_pairs(const std::vector<PathRecord>& paths);

nlohmann::json pairs_to_json(const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> pairs_from_json(const nlohmann::json& j);
void save_pairs(const std::filesystem::path& path, const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> load_pairs(const std::filesystem::path& path);

/// On-disk layout under a data root:
///   worlds/<suite>/<world-id>.json
///   paths/<suite>/<world-id>/<k>.json
///   pairs/<suite>.json
class DataRoot {
 public:
  explicit DataRoot(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path world_dir(const std::string& suite) const { return root_ / "worlds" / suite; }
  std::filesystem::path world_file(const std::string& suite, const std::string& id) const;
  std::filesystem::path path_dir(const std::string& suite, const std::string& world_id) const;
  std::filesystem::path path_file(const std::string& suite, const std::string& world_id, std::size_t k) const;
  std::filesystem::path pairs_file(const std::string& suite) const;

  void save_suite(const WorldSuite& suite) const;
  /// Worlds of a suite, sorted by id.
  std::vector<Workspace> load_worlds(const std::string& suite) const;
  /// Loads a path file and re-validates it against its workspace.
  PathRecord load_path(const std::string& suite, const Workspace& ws, const KinematicModel& model,
                       std::size_t k) const;
  std::vector<PathRecord> load_paths(const std::string& suite, const Workspace& ws,
                                     const KinematicModel& model) const;

 private:
  std::filesystem::path root_;
};

}  // namespace simpnet
