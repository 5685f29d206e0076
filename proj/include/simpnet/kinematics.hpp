#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Geometry>

namespace simpnet {

inline constexpr std::size_t kNumJoints = 6;

/// A configuration-space point: one angle per joint, radians.
using JointVector = std::array<double, kNumJoints>;
using Point3 = Eigen::Vector3d;

/// One row of a standard Denavit-Hartenberg table.
/// Frame transform: Rz(theta + theta_offset) * Tz(d) * Tx(a) * Rx(alpha).
struct DHRow {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct JointLimit {
  double lo = 0.0;
  double hi = 0.0;
};

/// Serial-arm geometry. Immutable after construction; all queries are pure.
class KinematicModel {
 public:
  KinematicModel(std::string name, std::array<DHRow, kNumJoints> dh,
                 std::array<JointLimit, kNumJoints> limits,
                 std::array<double, kNumJoints> link_radii,
                 Eigen::Isometry3d base_pose = Eigen::Isometry3d::Identity());

  /// UR5e-like table, limits [-pi, pi], 0.06 m capsules, identity base.
  static KinematicModel ur5e();

  const std::string& name() const { return name_; }
  const std::array<DHRow, kNumJoints>& dh() const { return dh_; }
  const std::array<JointLimit, kNumJoints>& limits() const { return limits_; }
  const std::array<double, kNumJoints>& link_radii() const { return radii_; }
  const Eigen::Isometry3d& base_pose() const { return base_; }

  /// Distance between frame origins k and k+1; fixed by (a, d) of row k.
  double link_length(std::size_t k) const { return link_lengths_[k]; }
  double total_length() const;

  /// Upper bound on the distance from joint j's axis point to any point of
  /// the chain it moves (sum of downstream link lengths).
  double swept_radius(std::size_t j) const { return swept_radius_[j]; }

  bool within_limits(const JointVector& q) const;
  JointVector clamp(const JointVector& q) const;

 private:
  std::string name_;
  std::array<DHRow, kNumJoints> dh_;
  std::array<JointLimit, kNumJoints> limits_;
  std::array<double, kNumJoints> radii_;
  Eigen::Isometry3d base_;
  std::array<double, kNumJoints> link_lengths_{};
  std::array<double, kNumJoints> swept_radius_{};
};

/// Base origin followed by the origin of every joint frame.
struct FrameSet {
  std::array<Point3, kNumJoints + 1> positions;
};

struct Capsule {
  Point3 p0;
  Point3 p1;
  double radius = 0.0;
};

FrameSet forward_kinematics(const KinematicModel& model, const JointVector& q);

/// positions[1..6] of forward_kinematics: the per-joint Cartesian points.
std::array<Point3, kNumJoints> joint_positions(const KinematicModel& model, const JointVector& q);

std::array<Capsule, kNumJoints> link_segments(const KinematicModel& model, const JointVector& q);
std::array<Capsule, kNumJoints> link_segments(const KinematicModel& model, const FrameSet& frames);

bool is_finite(const JointVector& q);

/// Joint-space Euclidean distance.
double distance(const JointVector& a, const JointVector& b);

}  // namespace simpnet
