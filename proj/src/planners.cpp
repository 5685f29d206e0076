#include "simpnet/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "simpnet/error.hpp"

namespace simpnet {

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(double budget) : start_(Clock::now()), budget_(budget) {}
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  bool expired() const { return budget_ > 0.0 && elapsed() >= budget_; }

 private:
  Clock::time_point start_;
  double budget_;
};

JointVector uniform_config(const KinematicModel& model, Rng& rng) {
  JointVector q;
  for (std::size_t i = 0; i < kNumJoints; ++i) q[i] = rng.uniform(model.limits()[i].lo, model.limits()[i].hi);
  return q;
}

JointVector steer(const JointVector& from, const JointVector& to, double step) {
  const double d = distance(from, to);
  if (d <= step) return to;
  JointVector q;
  const double t = step / d;
  for (std::size_t i = 0; i < kNumJoints; ++i) q[i] = from[i] + t * (to[i] - from[i]);
  return q;
}

PlanResult finish(Path path, bool success, const Stopwatch& watch, std::size_t iterations) {
  PlanResult r;
  r.success = success;
  if (success) {
    r.cost = path_cost(path);
    r.path = std::move(path);
  }
  r.wall_time = watch.elapsed();
  r.iterations_used = iterations;
  return r;
}

bool same_config(const JointVector& a, const JointVector& b) { return a == b; }

}  // namespace

const char* planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::rrt: return "rrt";
    case PlannerKind::birrt: return "birrt";
    case PlannerKind::rrt_star: return "rrt_star";
    case PlannerKind::informed_rrt_star: return "informed_rrt_star";
    case PlannerKind::simpnet: return "simpnet";
  }
  return "?";
}

PlannerKind parse_planner(const std::string& name) {
  for (PlannerKind k : {PlannerKind::rrt, PlannerKind::birrt, PlannerKind::rrt_star, PlannerKind::informed_rrt_star,
                        PlannerKind::simpnet})
    if (name == planner_name(k)) return k;
  if (name == "bi-rrt" || name == "bi_rrt" || name == "rrt-connect" || name == "rrt_connect")
    return PlannerKind::birrt;
  if (name == "rrt*" || name == "rrtstar") return PlannerKind::rrt_star;
  if (name == "irrt*" || name == "irrt_star" || name == "informed-rrt*") return PlannerKind::informed_rrt_star;
  throw InvalidArgument("unknown planner '" + name + "'");
}

void PlannerParams::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("planner: step_size must be positive");
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) throw InvalidArgument("planner: goal_bias must lie in [0, 1]");
  if (!(time_budget >= 0.0) || !std::isfinite(time_budget))
    throw InvalidArgument("planner: time_budget must be finite and >= 0");
  if (!(gamma > 0.0)) throw InvalidArgument("planner: gamma must be positive");
  if (!(motion.step > 0.0)) throw InvalidArgument("planner: motion check step must be positive");
}

std::size_t Tree::add(const JointVector& q, std::ptrdiff_t parent_index, double cost_to_come) {
  if (parent_index >= static_cast<std::ptrdiff_t>(vertices.size()))
    throw InvalidArgument("tree: parent index out of range");
  if (parent_index < 0 && !vertices.empty()) throw InvalidArgument("tree: root already present");
  vertices.push_back(q);
  parent.push_back(parent_index);
  cost.push_back(cost_to_come);
  return vertices.size() - 1;
}

std::size_t Tree::nearest(const JointVector& q) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    double d = 0.0;
    for (std::size_t k = 0; k < kNumJoints && d < best_d; ++k) {
      const double e = vertices[i][k] - q[k];
      d += e * e;
    }
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Path Tree::path_to(std::size_t index) const {
  Path p;
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(index); i >= 0; i = parent[static_cast<std::size_t>(i)])
    p.push_back(vertices[static_cast<std::size_t>(i)]);
  std::reverse(p.begin(), p.end());
  return p;
}

double path_cost(std::span<const JointVector> path) {
  if (path.empty()) throw InvalidArgument("path_cost: empty path");
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) c += distance(path[i], path[i + 1]);
  return c;
}

bool path_valid(std::span<const JointVector> path, const Workspace& ws, const KinematicModel& model,
                const MotionCheckParams& motion) {
  if (path.empty()) return false;
  if (path.size() == 1) return !config_in_collision(ws, model, path[0]);
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!motion_valid(ws, model, path[i], path[i + 1], motion)) return false;
  return true;
}

void check_query(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                 const JointVector& goal) {
  for (const auto* q : {&start, &goal}) {
    const char* which = q == &start ? "start" : "goal";
    if (!is_finite(*q)) throw InvalidQuery(std::string(which) + " configuration is not finite");
    if (!model.within_limits(*q)) throw InvalidQuery(std::string(which) + " configuration violates joint limits");
    if (config_in_collision(ws, model, *q)) throw InvalidQuery(std::string(which) + " configuration is in collision");
  }
}

// ---------------------------------------------------------------------------
// RRT

PlanResult rrt_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                    const JointVector& goal, const PlannerParams& params) {
  params.validate();
  check_query(ws, model, start, goal);
  const Stopwatch watch(params.time_budget);
  Rng rng(params.seed);
  Tree tree;
  tree.add(start, -1);
  if (distance(start, goal) <= params.step_size && motion_valid(ws, model, start, goal, params.motion))
    return finish({start, goal}, true, watch, 0);
  std::size_t it = 0;
  while (it < params.max_iterations && !watch.expired()) {
    ++it;
    const JointVector target = rng.bernoulli(params.goal_bias) ? goal : uniform_config(model, rng);
    const std::size_t n = tree.nearest(target);
    const JointVector q = steer(tree.vertices[n], target, params.step_size);
    if (!motion_valid(ws, model, tree.vertices[n], q, params.motion)) continue;
    const std::size_t idx = tree.add(q, static_cast<std::ptrdiff_t>(n));
    if (distance(q, goal) <= params.step_size && motion_valid(ws, model, q, goal, params.motion)) {
      Path p = tree.path_to(idx);
      if (!same_config(p.back(), goal)) p.push_back(goal);
      return finish(std::move(p), true, watch, it);
    }
  }
  return finish({}, false, watch, it);
}

// ---------------------------------------------------------------------------
// RRT-Connect

PlanResult birrt_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                      const JointVector& goal, const PlannerParams& params) {
  params.validate();
  check_query(ws, model, start, goal);
  const Stopwatch watch(params.time_budget);
  Rng rng(params.seed);
  Tree ta, tb;
  ta.add(start, -1);
  tb.add(goal, -1);
  if (distance(start, goal) <= params.step_size && motion_valid(ws, model, start, goal, params.motion))
    return finish({start, goal}, true, watch, 0);
  Tree* a = &ta;
  Tree* b = &tb;
  std::size_t it = 0;
  while (it < params.max_iterations && !watch.expired()) {
    ++it;
    const JointVector target = uniform_config(model, rng);
    const std::size_t n = a->nearest(target);
    const JointVector q = steer(a->vertices[n], target, params.step_size);
    if (motion_valid(ws, model, a->vertices[n], q, params.motion)) {
      const std::size_t ia = a->add(q, static_cast<std::ptrdiff_t>(n));
      std::size_t cur = b->nearest(q);
      bool reached = false;
      while (true) {
        const JointVector qs = steer(b->vertices[cur], q, params.step_size);
        if (!motion_valid(ws, model, b->vertices[cur], qs, params.motion)) break;
        cur = b->add(qs, static_cast<std::ptrdiff_t>(cur));
        if (same_config(qs, q)) {
          reached = true;
          break;
        }
      }
      if (reached) {
        Path pa = a->path_to(ia);
        Path pb = b->path_to(cur);
        pb.pop_back();  // q appears in both
        std::reverse(pb.begin(), pb.end());
        pa.insert(pa.end(), pb.begin(), pb.end());
        if (a != &ta) std::reverse(pa.begin(), pa.end());
        return finish(std::move(pa), true, watch, it);
      }
    }
    std::swap(a, b);
  }
  return finish({}, false, watch, it);
}

// ---------------------------------------------------------------------------
// RRT* and Informed RRT*

JointVector sample_informed(const JointVector& start, const JointVector& goal, double c_best, Rng& rng) {
  constexpr std::size_t n = kNumJoints;
  const double c_min = distance(start, goal);
  if (!(c_best >= c_min * (1.0 - 1e-9)) || !std::isfinite(c_best))
    throw InvalidArgument("sample_informed: c_best must be finite and >= the focal distance");
  c_best = std::max(c_best, c_min);
  // Unit-ball sample: Gaussian direction, radius U^(1/n).
  std::array<double, n> x{};
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : x) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm < 1e-300);
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / std::sqrt(norm);
  for (double& v : x) v *= radius;
  // Stretch: semi-axes c_best/2 along the focal axis, sqrt(c_best^2 - c_min^2)/2 elsewhere.
  x[0] *= c_best / 2.0;
  const double r_minor = std::sqrt(std::max(0.0, c_best * c_best - c_min * c_min)) / 2.0;
  for (std::size_t i = 1; i < n; ++i) x[i] *= r_minor;
  // Rotate e1 onto the focal axis with a Householder reflection.
  std::array<double, n> axis{};
  if (c_min > 0.0) {
    for (std::size_t i = 0; i < n; ++i) axis[i] = (goal[i] - start[i]) / c_min;
  } else {
    axis[0] = 1.0;
  }
  std::array<double, n> u{};
  double uu = 0.0, ux = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = (i == 0 ? 1.0 : 0.0) - axis[i];
    uu += u[i] * u[i];
    ux += u[i] * x[i];
  }
  JointVector q;
  for (std::size_t i = 0; i < n; ++i) {
    const double rotated = uu > 1e-24 ? x[i] - 2.0 * u[i] * ux / uu : x[i];
    q[i] = rotated + 0.5 * (start[i] + goal[i]);
  }
  return q;
}

namespace {

PlanResult rrt_star_impl(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                         const JointVector& goal, const PlannerParams& params, bool informed,
                         const InformedHooks& hooks) {
  params.validate();
  check_query(ws, model, start, goal);
  const Stopwatch watch(params.time_budget);
  Rng rng(params.seed);
  Tree tree;
  tree.add(start, -1, 0.0);
  std::vector<std::vector<std::size_t>> children(1);
  std::vector<std::size_t> goal_parents;
  const double c_min = distance(start, goal);
  if (c_min == 0.0) return finish({start, goal}, true, watch, 0);

  auto best_goal = [&]() -> std::pair<double, std::ptrdiff_t> {
    double best = std::numeric_limits<double>::infinity();
    std::ptrdiff_t arg = -1;
    for (std::size_t v : goal_parents) {
      const double c = tree.cost[v] + distance(tree.vertices[v], goal);
      if (c < best) {
        best = c;
        arg = static_cast<std::ptrdiff_t>(v);
      }
    }
    return {best, arg};
  };

  std::vector<std::size_t> near;
  std::vector<std::pair<double, std::size_t>> candidates;
  std::size_t it = 0;
  while (it < params.max_iterations && !watch.expired()) {
    ++it;
    JointVector target;
    const double c_best = informed ? best_goal().first : std::numeric_limits<double>::infinity();
    if (rng.bernoulli(params.goal_bias)) {
      target = goal;
    } else if (std::isfinite(c_best)) {
      // Rejection against the limits; the focal set always contains start and goal.
      bool found = false;
      for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
        target = sample_informed(start, goal, c_best, rng);
        found = model.within_limits(target) && distance(target, start) + distance(target, goal) <= c_best;
      }
      if (!found) continue;
      if (hooks.on_informed_sample) hooks.on_informed_sample(target, c_best);
    } else {
      target = uniform_config(model, rng);
    }
    const std::size_t n_idx = tree.nearest(target);
    const JointVector q = steer(tree.vertices[n_idx], target, params.step_size);
    if (config_in_collision(ws, model, q)) continue;

    const double n = static_cast<double>(tree.vertices.size() + 1);
    const double radius = params.gamma * std::pow(std::log(n) / n, 1.0 / static_cast<double>(kNumJoints));
    near.clear();
    for (std::size_t v = 0; v < tree.vertices.size(); ++v)
      if (distance(tree.vertices[v], q) <= radius) near.push_back(v);
    if (std::find(near.begin(), near.end(), n_idx) == near.end()) near.push_back(n_idx);

    candidates.clear();
    for (std::size_t v : near) candidates.emplace_back(tree.cost[v] + distance(tree.vertices[v], q), v);
    std::sort(candidates.begin(), candidates.end());
    std::ptrdiff_t parent = -1;
    double cost = 0.0;
    for (const auto& [c, v] : candidates)
      if (motion_valid(ws, model, tree.vertices[v], q, params.motion)) {
        parent = static_cast<std::ptrdiff_t>(v);
        cost = c;
        break;
      }
    if (parent < 0) continue;
    const std::size_t idx = tree.add(q, parent, cost);
    children.emplace_back();
    children[static_cast<std::size_t>(parent)].push_back(idx);

    for (std::size_t v : near) {
      if (v == static_cast<std::size_t>(parent)) continue;
      const double c = cost + distance(q, tree.vertices[v]);
      if (!(c < tree.cost[v] - 1e-12)) continue;
      if (!motion_valid(ws, model, q, tree.vertices[v], params.motion)) continue;
      auto& siblings = children[static_cast<std::size_t>(tree.parent[v])];
      siblings.erase(std::find(siblings.begin(), siblings.end(), v));
      tree.parent[v] = static_cast<std::ptrdiff_t>(idx);
      children[idx].push_back(v);
      const double delta = c - tree.cost[v];
      std::vector<std::size_t> stack{v};
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        tree.cost[u] += delta;
        stack.insert(stack.end(), children[u].begin(), children[u].end());
      }
    }
    if (distance(q, goal) <= radius && motion_valid(ws, model, q, goal, params.motion)) goal_parents.push_back(idx);
  }
  const std::ptrdiff_t arg = best_goal().second;
  if (arg < 0) return finish({}, false, watch, it);
  Path p = tree.path_to(static_cast<std::size_t>(arg));
  if (!same_config(p.back(), goal)) p.push_back(goal);
  return finish(std::move(p), true, watch, it);
}

}  // namespace

PlanResult rrt_star_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                         const JointVector& goal, const PlannerParams& params) {
  return rrt_star_impl(ws, model, start, goal, params, false, {});
}

PlanResult informed_rrt_star_plan(const Workspace& ws, const KinematicModel& model, const JointVector& start,
                                  const JointVector& goal, const PlannerParams& params, const InformedHooks& hooks) {
  return rrt_star_impl(ws, model, start, goal, params, true, hooks);
}

Path lazy_path_contraction(const Path& path, const Workspace& ws, const KinematicModel& model,
                           const MotionCheckParams& motion) {
  if (path.empty()) throw InvalidArgument("lazy_path_contraction: empty path");
  if (path.size() <= 2) return path;
  Path out{path.front()};
  std::size_t i = 0;
  const std::size_t last = path.size() - 1;
  while (i < last) {
    std::size_t j = last;
    while (j > i + 1 && !motion_valid(ws, model, path[i], path[j], motion)) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

PlanResult plan(PlannerKind kind, const Workspace& ws, const KinematicModel& model, const JointVector& start,
                const JointVector& goal, const PlannerParams& params, const HeuristicWeights* weights) {
  switch (kind) {
    case PlannerKind::rrt: return rrt_plan(ws, model, start, goal, params);
    case PlannerKind::birrt: return birrt_plan(ws, model, start, goal, params);
    case PlannerKind::rrt_star: return rrt_star_plan(ws, model, start, goal, params);
    case PlannerKind::informed_rrt_star: return informed_rrt_star_plan(ws, model, start, goal, params);
    case PlannerKind::simpnet:
      if (weights == nullptr) throw InvalidArgument("simpnet planner requires heuristic weights");
      return simpnet_plan(ws, model, start, goal, *weights, params);
  }
  throw InvalidArgument("unknown planner kind");
}

}  // namespace simpnet
