#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simpnet/heuristic.hpp"
#include "simpnet/kinematics.hpp"
#include "simpnet/random.hpp"
#include "simpnet/world.hpp"

namespace simpnet {

using Path = std::vector<JointVector>;

enum class PlannerKind { rrt, birrt, rrt_star, informed_rrt_star, simpnet };

const char* planner_name(PlannerKind kind);
PlannerKind parse_planner(const std::string& name);

struct PlannerParams {
  std::size_t max_iterations = 5000;
  double step_size = 0.3;
  double goal_bias = 0.05;
  /// Seconds; 0 disables the wall-clock limit.
  double time_budget = 0.0;
  /// RRT* near radius r(n) = gamma * (log n / n)^(1/6).
  double gamma = 5.35;
  /// Bidirectional neural loop length, per planning or repair call.
  std::size_t neural_steps = 100;
  std::size_t replanning_attempts = 5;
  /// Keep dropout active while sampling (the stochastic heuristic).
  bool neural_dropout = true;
  std::uint64_t seed = 0;
  MotionCheckParams motion;

  /// Throws InvalidArgument on nonsensical values.
  void validate() const;
};

struct PlanResult {
  Path path;
  bool success = false;
  double wall_time = 0.0;
  double cost = 0.0;
  std::size_t iterations_used = 0;
};

/// Search tree; vertex 0 is the root.
struct Tree {
  std::vector<JointVector> vertices;
  std::vector<std::ptrdiff_t> parent;
  std::vector<double> cost;

  std::size_t add(const JointVector& q, std::ptrdiff_t parent_index, double cost_to_come = 0.0);
  std::size_t nearest(const JointVector& q) const;
  /// Root-to-vertex configurations.
  Path path_to(std::size_t index) const;
};

/// Sum of joint-space L2 distances between consecutive waypoints.
double path_cost(std::span<const JointVector> path);

/// Every consecutive pair passes motion_valid.
bool path_valid(std::span<const JointVector> path, const Workspace& ws, const KinematicModel& model,
                const MotionCheckParams& motion = {});

/// Throws InvalidQuery unless both endpoints are finite, within limits and collision-free.
void check_query(const Workspace& ws, const KinematicModel& model, const JointVector& start, const JointVector& goal);

PlanResult rrt_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                    const JointVector& goal, const PlannerParams& params);

/// RRT-Connect: alternate extend / greedy connect between start and goal trees.
PlanResult birrt_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                      const JointVector& goal, const PlannerParams& params);

/// Anytime: returns the best solution found when the budget runs out.
PlanResult rrt_star_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                         const JointVector& goal, const PlannerParams& params);

/// Uniform sample from the prolate hyperspheroid with the given foci and
/// transverse diameter c_best (> ||goal - start||).
JointVector sample_informed(const JointVector& start, const JointVector& goal, double c_best, Rng& rng);

struct InformedHooks {
  /// Called for each informed sample drawn, with the c_best it was drawn under.
  std::function<void(const JointVector&, double)> on_informed_sample;
};

PlanResult informed_rrt_star_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                                  const JointVector& goal, const PlannerParams& params,
                                  const InformedHooks& hooks = {});

/// From each kept waypoint, jump to the farthest later waypoint reachable by
/// a valid straight motion. Endpoints are preserved; cost never increases.
Path lazy_path_contraction(const Path& path, const Workspace& ws, const KinematicModel& model,
                           const MotionCheckParams& motion = {});

/// Neural bidirectional planner with contraction, full-path checking and replanning.
PlanResult simpnet_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                        const JointVector& goal, const HeuristicWeights& weights, const PlannerParams& params);

/// Repairs every colliding segment of path by re-running the bidirectional
/// loop between its endpoints, up to replanning_attempts rounds, contracting
/// and re-checking after each round. iterations accumulates neural samples.
std::optional<Path> neural_replan(const Path& path, const Workspace& ws, const KinematicModel& model,
                                  const HeuristicSampler& sampler, const PlannerParams& params, Rng& rng,
                                  std::size_t& iterations);

/// Dispatch on kind; weights are required only for simpnet.
PlanResult plan(PlannerKind kind, const Workspace& ws, const KinematicModel& model, const JointVector& start,
                const JointVector& goal, const PlannerParams& params, const HeuristicWeights* weights = nullptr);

}  // namespace simpnet
