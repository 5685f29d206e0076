#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "simpnet/dataset.hpp"
#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"

using namespace simpnet;

namespace {

JointVector random_q(Rng& r) {
  JointVector q;
  for (double& x : q) x = r.uniform(-std::numbers::pi, std::numbers::pi);
  return q;
}

Point3 random_point(Rng& r, double s) { return {r.uniform(-s, s), r.uniform(-s, s), r.uniform(-s, s)}; }

}  // namespace

TEST_CASE("segment-box distance agrees with dense sampling") {
  Rng r(21);
  for (int i = 0; i < 500; ++i) {
    BoxObstacle box{random_point(r, 0.5), {r.uniform(0.05, 0.5), r.uniform(0.05, 0.5), r.uniform(0.05, 0.5)}};
    const Point3 a = random_point(r, 1.0), b = random_point(r, 1.0);
    const double exact = segment_box_distance(a, b, box);
    const double sampled = oracle::sampled_segment_box_distance({a.x(), a.y(), a.z()}, {b.x(), b.y(), b.z()},
                                                                box, 1e-4);
    CHECK(exact <= sampled + 1e-12);
    CHECK(sampled - exact < 1e-4);
  }
}

TEST_CASE("segment-box distance special cases") {
  const BoxObstacle box{{0, 0, 0}, {1, 1, 1}};
  CHECK(segment_box_distance({-2, 0, 0}, {2, 0, 0}, box) == 0.0);
  CHECK(segment_box_distance({1, 1, 0}, {1, 1, 0}, box) == doctest::Approx(std::sqrt(0.5)));
  CHECK(segment_box_distance({-1, 0.7, 0}, {1, 0.7, 0}, box) == doctest::Approx(0.2));
}

TEST_CASE("clearance sign matches the collision predicate") {
  const KinematicModel m = KinematicModel::ur5e();
  Rng r(22);
  const WorldSuite suite = generate_suite("t", Profile::simple, 4, 5, m);
  for (int i = 0; i < 400; ++i) {
    const Workspace& ws = suite.worlds[i % 4];
    const JointVector q = random_q(r);
    const double c = clearance(ws, m, q);
    CHECK((c < 0) == config_in_collision(ws, m, q));
    const double ref = oracle::sampled_clearance(ws, m, q, 2e-4).clearance;
    CHECK(c <= ref + 1e-12);
    CHECK(ref - c < 2e-4);
  }
}

TEST_CASE("an empty workspace never collides") {
  const KinematicModel m = KinematicModel::ur5e();
  const Workspace ws = Workspace::empty();
  Rng r(23);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(config_in_collision(ws, m, random_q(r)));
  CHECK(motion_valid(ws, m, random_q(r), random_q(r)));
}

TEST_CASE("motion check is symmetric and catches a blocking box") {
  const KinematicModel m = KinematicModel::ur5e();
  JointVector a{}, b{};
  a[0] = -1.5;
  b[0] = 1.5;
  // The arm at q = 0 stretches along -x; a box on that side blocks the sweep through zero.
  const Workspace blocked("blocked", Profile::simple, Workspace::default_bounds(),
                          {BoxObstacle{{-0.6, 0.0, 0.16}, {0.1, 0.1, 0.1}}});
  CHECK_FALSE(config_in_collision(blocked, m, a));
  CHECK_FALSE(config_in_collision(blocked, m, b));
  CHECK_FALSE(motion_valid(blocked, m, a, b));
  CHECK_FALSE(motion_valid(blocked, m, b, a));
  CHECK_FALSE(discrete_motion_valid(blocked, m, a, b, 0.025));
}

TEST_CASE("certified motion check is never less strict than a fine sweep") {
  const KinematicModel m = KinematicModel::ur5e();
  const WorldSuite suite = generate_suite("t", Profile::simple, 3, 8, m);
  Rng r(24);
  int valid = 0;
  for (int i = 0; i < 150; ++i) {
    const Workspace& ws = suite.worlds[i % 3];
    const JointVector a = sample_free_config(ws, m, r);
    JointVector b = a;
    for (double& x : b) x += r.uniform(-0.6, 0.6);
    b = m.clamp(b);
    const bool v = motion_valid(ws, m, a, b);
    CHECK(v == motion_valid(ws, m, b, a));
    if (v) {
      ++valid;
      CHECK(discrete_motion_valid(ws, m, a, b, 0.005));
    }
  }
  CHECK(valid > 20);
}

TEST_CASE("obstacle vector is normalized and padded") {
  const Workspace ws("w", Profile::simple, Workspace::default_bounds(),
                     {BoxObstacle{{0.75, 0, -0.75}, {0.3, 0.15, 1.5}}});
  const auto v = obstacle_vector(ws);
  REQUIRE(v.size() == profile_capacity(Profile::simple) * 6);
  CHECK(v[0] == doctest::Approx(0.5));
  CHECK(v[2] == doctest::Approx(-0.5));
  CHECK(v[3] == doctest::Approx(0.2));
  CHECK(v[5] == doctest::Approx(1.0));
  for (std::size_t i = 6; i < v.size(); ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("workspace construction rejects bad input") {
  CHECK_THROWS_AS(Workspace("w", Profile::simple, Workspace::default_bounds(),
                            std::vector<BoxObstacle>(7, BoxObstacle{})),
                  InvalidArgument);
  CHECK_THROWS_AS(Workspace("w", Profile::simple, Workspace::default_bounds(),
                            {BoxObstacle{{0, 0, 0}, {-1, 1, 1}}}),
                  InvalidArgument);
  CHECK(parse_profile("complex") == Profile::complex);
  CHECK_THROWS_AS(parse_profile("huge"), InvalidArgument);
}

TEST_CASE("workspace round trips through JSON") {
  const KinematicModel m = KinematicModel::ur5e();
  Rng r(25);
  const Workspace ws = generate_world(Profile::complex, r, m, "c-0");
  const Workspace back = workspace_from_json(workspace_to_json(ws));
  CHECK(back.id() == ws.id());
  CHECK(back.capacity() == ws.capacity());
  REQUIRE(back.obstacles().size() == ws.obstacles().size());
  for (std::size_t i = 0; i < ws.obstacles().size(); ++i) {
    CHECK(back.obstacles()[i].center == ws.obstacles()[i].center);
    CHECK(back.obstacles()[i].dims == ws.obstacles()[i].dims);
  }
}
