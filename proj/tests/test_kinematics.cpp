#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"
#include "simpnet/random.hpp"

using namespace simpnet;

namespace {

JointVector random_q(Rng& r) {
  JointVector q;
  for (double& x : q) x = r.uniform(-std::numbers::pi, std::numbers::pi);
  return q;
}

}  // namespace

TEST_CASE("forward kinematics matches explicit transform products") {
  const KinematicModel m = KinematicModel::ur5e();
  Rng r(11);
  for (int i = 0; i < 50; ++i) {
    const JointVector q = random_q(r);
    const FrameSet f = forward_kinematics(m, q);
    const auto ref = oracle::fk_positions(m, q);
    for (std::size_t k = 0; k < 7; ++k)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(f.positions[k][c] - ref[k][c]) < 1e-9);
  }
}

TEST_CASE("zero configuration of the UR5e table") {
  const KinematicModel m = KinematicModel::ur5e();
  const auto p = joint_positions(m, JointVector{});
  // Shoulder lift axis sits d1 above the base; the forearm reaches along -x.
  CHECK(p[0].z() == doctest::Approx(0.1625));
  CHECK(p[2].x() == doctest::Approx(-0.425 - 0.3922));
}

TEST_CASE("link lengths do not depend on the configuration") {
  const KinematicModel m = KinematicModel::ur5e();
  Rng r(12);
  for (int i = 0; i < 200; ++i) {
    const auto segs = link_segments(m, random_q(r));
    for (std::size_t k = 0; k < kNumJoints; ++k) {
      CHECK((segs[k].p1 - segs[k].p0).norm() == doctest::Approx(m.link_length(k)).epsilon(1e-12));
      CHECK(segs[k].radius == 0.06);
    }
  }
}

TEST_CASE("swept radius bounds the motion of downstream points") {
  const KinematicModel m = KinematicModel::ur5e();
  Rng r(13);
  for (int i = 0; i < 100; ++i) {
    JointVector q = random_q(r);
    const std::size_t j = r.below(kNumJoints);
    const auto a = forward_kinematics(m, q);
    q[j] += 1e-4;
    const auto b = forward_kinematics(m, q);
    for (std::size_t k = 0; k <= kNumJoints; ++k)
      CHECK((b.positions[k] - a.positions[k]).norm() <= m.swept_radius(j) * 1e-4 * (1 + 1e-6) + 1e-15);
  }
}

TEST_CASE("limits, clamp and distance") {
  const KinematicModel m = KinematicModel::ur5e();
  JointVector q{};
  CHECK(m.within_limits(q));
  q[3] = 4.0;
  CHECK_FALSE(m.within_limits(q));
  CHECK(m.clamp(q)[3] == doctest::Approx(std::numbers::pi));
  CHECK(distance(JointVector{}, JointVector{3, 4, 0, 0, 0, 0}) == doctest::Approx(5.0));
  q[0] = std::nan("");
  CHECK_FALSE(is_finite(q));
}

TEST_CASE("robot description round trips through JSON") {
  const KinematicModel m = KinematicModel::ur5e();
  const KinematicModel back = robot_from_json(robot_to_json(m));
  Rng r(14);
  const JointVector q = random_q(r);
  const auto a = joint_positions(m, q), b = joint_positions(back, q);
  for (std::size_t k = 0; k < kNumJoints; ++k) CHECK((a[k] - b[k]).norm() == 0.0);
  CHECK_THROWS_AS(robot_from_json(nlohmann::json{{"format", "other"}}), FormatError);
}
