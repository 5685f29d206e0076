#include <chrono>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "simpnet/dataset.hpp"
#include "simpnet/error.hpp"
#include "simpnet/planners.hpp"

using namespace simpnet;

namespace {

const PlannerKind kClassical[] = {PlannerKind::rrt, PlannerKind::birrt, PlannerKind::rrt_star,
                                  PlannerKind::informed_rrt_star};

PlannerParams params(std::uint64_t seed, std::size_t iterations = 3000) {
  PlannerParams p;
  p.seed = seed;
  p.max_iterations = iterations;
  return p;
}

struct Fixture {
  KinematicModel model = KinematicModel::ur5e();
  WorldSuite suite = generate_suite("p", Profile::simple, 3, 77, model);
};

}  // namespace

TEST_CASE("path cost and names") {
  const Path p{JointVector{}, JointVector{3, 4, 0, 0, 0, 0}, JointVector{3, 4, 0, 0, 0, 1}};
  CHECK(path_cost(p) == doctest::Approx(6.0));
  CHECK(parse_planner("informed_rrt_star") == PlannerKind::informed_rrt_star);
  CHECK(parse_planner("rrt-connect") == PlannerKind::birrt);
  CHECK(std::string(planner_name(PlannerKind::simpnet)) == "simpnet");
  CHECK_THROWS_AS(parse_planner("prm"), InvalidArgument);
  PlannerParams bad;
  bad.step_size = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("colliding endpoints are rejected") {
  const KinematicModel m = KinematicModel::ur5e();
  const Workspace ws("w", Profile::simple, Workspace::default_bounds(),
                     {BoxObstacle{{-0.6, 0.0, 0.16}, {0.1, 0.1, 0.1}}});
  JointVector free{};
  free[0] = 1.5;
  const JointVector hit{};
  REQUIRE(config_in_collision(ws, m, hit));
  for (PlannerKind k : kClassical) CHECK_THROWS_AS(plan(k, ws, m, hit, free, params(1)), InvalidQuery);
  CHECK_THROWS_AS(plan(PlannerKind::simpnet, ws, m, free, free, params(1)), InvalidArgument);
}

TEST_CASE("every planner solves an open workspace") {
  const KinematicModel m = KinematicModel::ur5e();
  const Workspace ws = Workspace::empty();
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 1);
  const JointVector a{0.1, -1.0, 0.5, 0.0, 1.0, 0.0}, b{2.0, -0.5, -1.0, 1.0, 0.0, 1.5};
  for (PlannerKind k : {PlannerKind::rrt, PlannerKind::birrt, PlannerKind::rrt_star, PlannerKind::informed_rrt_star,
                        PlannerKind::simpnet}) {
    const PlanResult r = plan(k, ws, m, a, b, params(2, 500), &w);
    INFO(planner_name(k));
    REQUIRE(r.success);
    CHECK(r.path.front() == a);
    CHECK(r.path.back() == b);
    CHECK(r.cost == doctest::Approx(path_cost(r.path)));
    CHECK(r.cost >= distance(a, b) - 1e-12);
    CHECK(path_valid(r.path, ws, m));
  }
}

TEST_CASE("successful paths survive a half-step sweep") {
  Fixture f;
  int successes = 0;
  for (std::size_t w = 0; w < f.suite.worlds.size(); ++w) {
    const Workspace& ws = f.suite.worlds[w];
    const auto queries = generate_queries(ws, f.model, 3, Rng::derive(5, {w}));
    for (const Query& q : queries)
      for (PlannerKind k : kClassical) {
        const PlanResult r = plan(k, ws, f.model, q.start, q.goal, params(w, 1500));
        if (!r.success) continue;
        ++successes;
        for (std::size_t i = 0; i + 1 < r.path.size(); ++i)
          CHECK(discrete_motion_valid(ws, f.model, r.path[i], r.path[i + 1], 0.025));
      }
  }
  CHECK(successes > 20);
}

TEST_CASE("planning is deterministic under a fixed seed") {
  Fixture f;
  const Workspace& ws = f.suite.worlds[0];
  const Query q = generate_queries(ws, f.model, 1, 3)[0];
  for (PlannerKind k : kClassical) {
    const PlanResult a = plan(k, ws, f.model, q.start, q.goal, params(11, 800));
    const PlanResult b = plan(k, ws, f.model, q.start, q.goal, params(11, 800));
    CHECK(a.success == b.success);
    CHECK(a.path == b.path);
    CHECK(a.iterations_used == b.iterations_used);
  }
}

TEST_CASE("RRT* cost does not grow with more iterations on the same seed") {
  Fixture f;
  const Workspace& ws = f.suite.worlds[1];
  const auto queries = generate_queries(ws, f.model, 3, 9);
  for (const Query& q : queries) {
    double previous = INFINITY;
    for (std::size_t n : {300, 600, 1200}) {
      const PlanResult r = rrt_star_plan(ws, f.model, q.start, q.goal, params(4, n));
      if (r.success) {
        CHECK(r.cost <= previous + 1e-12);
        previous = r.cost;
      } else {
        CHECK(std::isinf(previous));
      }
    }
  }
}

TEST_CASE("informed samples fill the prolate hyperspheroid") {
  Rng r(61);
  const JointVector a{0, 0, 0, 0, 0, 0}, b{1, 1, 0, 0, 0, 0};
  const double c_min = distance(a, b), c_best = 1.5 * c_min;
  double mean[6] = {};
  const int n = 20000;
  int inner = 0;
  for (int i = 0; i < n; ++i) {
    const JointVector x = sample_informed(a, b, c_best, r);
    CHECK(distance(x, a) + distance(x, b) <= c_best * (1 + 1e-12));
    for (int j = 0; j < 6; ++j) mean[j] += x[j] / n;
    if (distance(x, a) + distance(x, b) <= 0.5 * (c_min + c_best)) ++inner;
  }
  CHECK(mean[0] == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(mean[2]) < 0.02);
  // A uniform draw puts a volume-proportional share inside the smaller spheroid.
  const double ci = 0.5 * (c_min + c_best);
  const double ratio = ci * std::pow(ci * ci - c_min * c_min, 2.5) /
                       (c_best * std::pow(c_best * c_best - c_min * c_min, 2.5));
  CHECK(static_cast<double>(inner) / n == doctest::Approx(ratio).epsilon(0.05));
}

TEST_CASE("informed RRT* draws samples under its current bound") {
  Fixture f;
  const Workspace& ws = f.suite.worlds[2];
  const Query q = generate_queries(ws, f.model, 1, 12)[0];
  std::size_t hooked = 0;
  InformedHooks hooks;
  hooks.on_informed_sample = [&](const JointVector& x, double c_best) {
    ++hooked;
    CHECK(distance(x, q.start) + distance(x, q.goal) <= c_best * (1 + 1e-9));
  };
  const PlanResult r = informed_rrt_star_plan(ws, f.model, q.start, q.goal, params(3, 1500), hooks);
  if (r.success) CHECK(hooked > 0);
}

TEST_CASE("lazy contraction keeps endpoints and never adds cost") {
  Fixture f;
  const Workspace& ws = f.suite.worlds[0];
  const auto queries = generate_queries(ws, f.model, 4, 21);
  for (const Query& q : queries) {
    const PlanResult r = rrt_plan(ws, f.model, q.start, q.goal, params(6));
    if (!r.success) continue;
    const Path c = lazy_path_contraction(r.path, ws, f.model);
    CHECK(c.front() == r.path.front());
    CHECK(c.back() == r.path.back());
    CHECK(path_cost(c) <= path_cost(r.path) + 1e-12);
    CHECK(path_valid(c, ws, f.model));
  }
  const Path open{JointVector{}, JointVector{0.1, 0, 0, 0, 0, 0}, JointVector{0.2, 0, 0, 0, 0, 0}};
  CHECK(lazy_path_contraction(open, Workspace::empty(), f.model).size() == 2);
}

TEST_CASE("time budget bounds the wall clock") {
  Fixture f;
  const Workspace& ws = f.suite.worlds[0];
  const Query q = generate_queries(ws, f.model, 1, 31)[0];
  PlannerParams p = params(1, 10'000'000);
  p.time_budget = 0.05;
  const auto t0 = std::chrono::steady_clock::now();
  const PlanResult r = rrt_star_plan(ws, f.model, q.start, q.goal, p);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 0.5);
  CHECK(r.iterations_used < p.max_iterations);
  // The same run capped at the iterations it reached reproduces the result.
  PlannerParams capped = params(1, r.iterations_used);
  const PlanResult again = rrt_star_plan(ws, f.model, q.start, q.goal, capped);
  CHECK(again.path == r.path);
}

TEST_CASE("neural planner with untrained weights stays sound and deterministic without dropout") {
  Fixture f;
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 2);
  const Workspace& ws = f.suite.worlds[0];
  const auto queries = generate_queries(ws, f.model, 4, 41);
  for (const Query& q : queries) {
    PlannerParams p = params(5);
    p.neural_steps = 40;
    p.neural_dropout = false;
    const PlanResult a = simpnet_plan(ws, f.model, q.start, q.goal, w, p);
    const PlanResult b = simpnet_plan(ws, f.model, q.start, q.goal, w, p);
    CHECK(a.path == b.path);
    if (a.success) {
      CHECK(a.path.front() == q.start);
      CHECK(a.path.back() == q.goal);
      CHECK(path_valid(a.path, ws, f.model));
    }
  }
}

TEST_CASE("replanning leaves a valid path alone") {
  Fixture f;
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 2);
  const Workspace ws = Workspace::empty();
  const HeuristicSampler s(w, ws, f.model);
  const Path path{JointVector{}, JointVector{0.5, 0, 0, 0, 0, 0}};
  Rng r(1);
  std::size_t it = 0;
  const auto out = neural_replan(path, ws, f.model, s, params(1), r, it);
  REQUIRE(out.has_value());
  CHECK(*out == path);
  CHECK(it == 0);
}
