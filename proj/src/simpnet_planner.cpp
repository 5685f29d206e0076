#include <algorithm>
#include <chrono>

#include "simpnet/error.hpp"
#include "simpnet/planners.hpp"

namespace simpnet {

namespace {

using Clock = std::chrono::steady_clock;

struct NeuralContext {
  const Workspace& ws;
  const KinematicModel& model;
  const HeuristicSampler& sampler;
  const PlannerParams& params;
  Rng& rng;
  Clock::time_point started;
  std::size_t& iterations;

  bool expired() const {
    return params.time_budget > 0.0 &&
           std::chrono::duration<double>(Clock::now() - started).count() >= params.time_budget;
  }
  nn::DropoutMode dropout() const { return params.neural_dropout ? nn::DropoutMode::sample : nn::DropoutMode::off; }
};

// Grows one node list from each end, always sampling toward the other
// list's frontier and swapping roles every step. Samples are point-checked;
// the edges between consecutive samples are left to the full-path check.
std::optional<Path> bidirectional(const NeuralContext& ctx, const JointVector& from, const JointVector& to) {
  Path qa{from}, qb{to};
  bool a_is_from = true;
  for (std::size_t i = 0; i < ctx.params.neural_steps; ++i) {
    if (ctx.expired()) break;
    ++ctx.iterations;
    const JointVector q_new = ctx.sampler.next(qa.back(), qb.back(), ctx.rng, ctx.dropout());
    if (!config_in_collision(ctx.ws, ctx.model, q_new)) {
      qa.push_back(q_new);
      if (motion_valid(ctx.ws, ctx.model, qa.back(), qb.back(), ctx.params.motion)) {
        Path& head = a_is_from ? qa : qb;
        Path& tail = a_is_from ? qb : qa;
        Path out = head;
        out.insert(out.end(), tail.rbegin(), tail.rend());
        return out;
      }
    }
    std::swap(qa, qb);
    a_is_from = !a_is_from;
  }
  return std::nullopt;
}

std::optional<Path> replan(const NeuralContext& ctx, const Path& path) {
  Path current = path;
  for (std::size_t attempt = 0; attempt < ctx.params.replanning_attempts; ++attempt) {
    Path repaired{current.front()};
    for (std::size_t i = 0; i + 1 < current.size(); ++i) {
      const JointVector& a = current[i];
      const JointVector& b = current[i + 1];
      if (!motion_valid(ctx.ws, ctx.model, a, b, ctx.params.motion)) {
        if (auto segment = bidirectional(ctx, a, b)) {
          repaired.insert(repaired.end(), segment->begin() + 1, segment->end());
          continue;
        }
      }
      repaired.push_back(b);
    }
    current = lazy_path_contraction(repaired, ctx.ws, ctx.model, ctx.params.motion);
    if (path_valid(current, ctx.ws, ctx.model, ctx.params.motion)) return current;
    if (ctx.expired()) break;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Path> neural_replan(const Path& path, const Workspace& ws, const KinematicModel& model,
                                  const HeuristicSampler& sampler, const PlannerParams& params, Rng& rng,
                                  std::size_t& iterations) {
  if (path.empty()) throw InvalidArgument("neural_replan: empty path");
  if (path_valid(path, ws, model, params.motion)) return path;
  if (config_in_collision(ws, model, path.front()) || config_in_collision(ws, model, path.back()))
    throw InvalidArgument("neural_replan: path endpoints must be collision-free");
  const NeuralContext ctx{ws, model, sampler, params, rng, Clock::now(), iterations};
  return replan(ctx, path);
}

PlanResult simpnet_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                        const JointVector& goal, const HeuristicWeights& weights, const PlannerParams& params) {
  params.validate();
  check_query(ws, model, start, goal);
  const auto started = Clock::now();
  const HeuristicSampler sampler(weights, ws, model);
  Rng rng(params.seed);
  std::size_t iterations = 0;
  const NeuralContext ctx{ws, model, sampler, params, rng, started, iterations};

  PlanResult result;
  std::optional<Path> path = bidirectional(ctx, start, goal);
  if (path) {
    Path q = lazy_path_contraction(*path, ws, model, params.motion);
    if (path_valid(q, ws, model, params.motion)) {
      path = std::move(q);
    } else {
      path = replan(ctx, q);
    }
  }
  if (path) {
    result.success = true;
    result.cost = path_cost(*path);
    result.path = std::move(*path);
  }
  result.iterations_used = iterations;
  result.wall_time = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

}  // namespace simpnet
