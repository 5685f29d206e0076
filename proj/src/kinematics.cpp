#include "simpnet/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simpnet/error.hpp"

namespace simpnet {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("kinematic model: non-finite ") + what);
}

}  // namespace

KinematicModel::KinematicModel(std::string name, std::array<DHRow, kNumJoints> dh,
                               std::array<JointLimit, kNumJoints> limits,
                               std::array<double, kNumJoints> link_radii,
                               Eigen::Isometry3d base_pose)
    : name_(std::move(name)), dh_(dh), limits_(limits), radii_(link_radii), base_(base_pose) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    require_finite(dh_[i].a, "DH a");
    require_finite(dh_[i].alpha, "DH alpha");
    require_finite(dh_[i].d, "DH d");
    require_finite(dh_[i].theta_offset, "DH theta offset");
    require_finite(limits_[i].lo, "joint limit");
    require_finite(limits_[i].hi, "joint limit");
    if (!(limits_[i].lo < limits_[i].hi))
      throw InvalidArgument("kinematic model: joint " + std::to_string(i) + " has lo >= hi");
    if (!(radii_[i] > 0.0) || !std::isfinite(radii_[i]))
      throw InvalidArgument("kinematic model: link radius must be positive");
    link_lengths_[i] = std::hypot(dh_[i].a, dh_[i].d);
  }
  if (!base_.matrix().allFinite()) throw InvalidArgument("kinematic model: non-finite base pose");
  double acc = 0.0;
  for (std::size_t j = kNumJoints; j-- > 0;) {
    acc += link_lengths_[j];
    swept_radius_[j] = acc;
  }
}

KinematicModel KinematicModel::ur5e() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  std::array<DHRow, kNumJoints> dh{{
      {0.0, half_pi, 0.1625, 0.0},
      {-0.425, 0.0, 0.0, 0.0},
      {-0.3922, 0.0, 0.0, 0.0},
      {0.0, half_pi, 0.1333, 0.0},
      {0.0, -half_pi, 0.0997, 0.0},
      {0.0, 0.0, 0.0996, 0.0},
  }};
  std::array<JointLimit, kNumJoints> limits;
  limits.fill({-std::numbers::pi, std::numbers::pi});
  std::array<double, kNumJoints> radii;
  radii.fill(0.06);
  return KinematicModel("ur5e", dh, limits, radii);
}

double KinematicModel::total_length() const { return swept_radius_[0]; }

bool KinematicModel::within_limits(const JointVector& q) const {
  for (std::size_t i = 0; i < kNumJoints; ++i)
    if (q[i] < limits_[i].lo || q[i] > limits_[i].hi) return false;
  return true;
}

JointVector KinematicModel::clamp(const JointVector& q) const {
  JointVector out;
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = std::clamp(q[i], limits_[i].lo, limits_[i].hi);
  return out;
}

bool is_finite(const JointVector& q) {
  return std::all_of(q.begin(), q.end(), [](double v) { return std::isfinite(v); });
}

double distance(const JointVector& a, const JointVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

FrameSet forward_kinematics(const KinematicModel& model, const JointVector& q) {
  if (!is_finite(q)) throw InvalidArgument("forward_kinematics: non-finite joint vector");
  FrameSet out;
  Eigen::Matrix4d t = model.base_pose().matrix();
  out.positions[0] = t.block<3, 1>(0, 3);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const DHRow& row = model.dh()[i];
    const double theta = q[i] + row.theta_offset;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
    Eigen::Matrix4d link;
    link << ct, -st * ca, st * sa, row.a * ct,
            st, ct * ca, -ct * sa, row.a * st,
            0.0, sa, ca, row.d,
            0.0, 0.0, 0.0, 1.0;
    t = t * link;
    out.positions[i + 1] = t.block<3, 1>(0, 3);
  }
  return out;
}

std::array<Point3, kNumJoints> joint_positions(const KinematicModel& model, const JointVector& q) {
  const FrameSet frames = forward_kinematics(model, q);
  std::array<Point3, kNumJoints> out;
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = frames.positions[i + 1];
  return out;
}

std::array<Capsule, kNumJoints> link_segments(const KinematicModel& model, const FrameSet& frames) {
  std::array<Capsule, kNumJoints> out;
  for (std::size_t k = 0; k < kNumJoints; ++k)
    out[k] = Capsule{frames.positions[k], frames.positions[k + 1], model.link_radii()[k]};
  return out;
}

std::array<Capsule, kNumJoints> link_segments(const KinematicModel& model, const JointVector& q) {
  return link_segments(model, forward_kinematics(model, q));
}

}  // namespace simpnet
