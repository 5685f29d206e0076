#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "simpnet/kinematics.hpp"

namespace simpnet {

/// Solid axis-aligned box. dims are full edge lengths (L, W, H).
struct BoxObstacle {
  Point3 center = Point3::Zero();
  Point3 dims = Point3::Ones();
};

struct Aabb {
  Point3 lo = Point3::Zero();
  Point3 hi = Point3::Zero();

  Point3 center() const { return 0.5 * (lo + hi); }
  Point3 half_extent() const { return 0.5 * (hi - lo); }
};

enum class Profile { simple, complex };

/// Fixed obstacle slots per profile; obstacle_vector() is padded to this.
std::size_t profile_capacity(Profile profile);
const char* profile_name(Profile profile);
Profile parse_profile(const std::string& name);

class Workspace {
 public:
  Workspace(std::string id, Profile profile, Aabb bounds, std::vector<BoxObstacle> obstacles);
  /// Same, with an explicit slot count (used by tests that need a small capacity).
  Workspace(std::string id, Profile profile, Aabb bounds, std::vector<BoxObstacle> obstacles,
            std::size_t capacity);

  const std::string& id() const { return id_; }
  Profile profile() const { return profile_; }
  const Aabb& bounds() const { return bounds_; }
  const std::vector<BoxObstacle>& obstacles() const { return obstacles_; }
  std::size_t capacity() const { return capacity_; }

  /// Empty workspace with bounds large enough to never constrain the arm.
  static Workspace empty(Profile profile = Profile::simple);
  static Aabb default_bounds();

 private:
  std::string id_;
  Profile profile_;
  Aabb bounds_;
  std::vector<BoxObstacle> obstacles_;
  std::size_t capacity_;
};

struct MotionCheckParams {
  /// Maximum joint-space L2 distance between consecutive interpolation samples.
  double step = 0.05;
};

/// Euclidean distance between a segment and a solid box; 0 when they touch.
double segment_box_distance(const Point3& p0, const Point3& p1, const BoxObstacle& box);

/// Signed margin of the arm at q: min over links of (distance to nearest
/// obstacle - radius), also accounting for the capsules' margin to the
/// workspace bounds. Negative exactly when config_in_collision(q) is true.
double clearance(const Workspace& ws, const KinematicModel& model, const JointVector& q);

bool config_in_collision(const Workspace& ws, const KinematicModel& model, const JointVector& q);

/// Straight joint-space motion check. Samples the segment at spacing <= step
/// (both endpoints included); between consecutive free samples the swept arm
/// is certified against the samples' clearances, bisecting where the bound
/// is not tight enough. Symmetric in (a, b).
bool motion_valid(const Workspace& ws, const KinematicModel& model, const JointVector& a,
                  const JointVector& b, const MotionCheckParams& params = {});

/// Plain discretized check at the given spacing, no certification. Used as
/// the independent soundness sweep.
bool discrete_motion_valid(const Workspace& ws, const KinematicModel& model, const JointVector& a,
                           const JointVector& b, double step);

/// Obstacles as (center, dims) sextuples normalized by the bounds
/// half-extent (centers relative to the bounds center), zero-padded to
/// capacity * 6.
std::vector<double> obstacle_vector(const Workspace& ws);

}  // namespace simpnet
