#include "simpnet/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simpnet/error.hpp"

namespace simpnet {

std::size_t profile_capacity(Profile profile) { return profile == Profile::simple ? 6 : 10; }

const char* profile_name(Profile profile) { return profile == Profile::simple ? "simple" : "complex"; }

Profile parse_profile(const std::string& name) {
  if (name == "simple") return Profile::simple;
  if (name == "complex") return Profile::complex;
  throw InvalidArgument("unknown workspace profile '" + name + "'");
}

Workspace::Workspace(std::string id, Profile profile, Aabb bounds, std::vector<BoxObstacle> obstacles)
    : Workspace(std::move(id), profile, bounds, std::move(obstacles), profile_capacity(profile)) {}

Workspace::Workspace(std::string id, Profile profile, Aabb bounds, std::vector<BoxObstacle> obstacles,
                     std::size_t capacity)
    : id_(std::move(id)), profile_(profile), bounds_(bounds), obstacles_(std::move(obstacles)),
      capacity_(capacity) {
  if (!bounds_.lo.allFinite() || !bounds_.hi.allFinite() || !(bounds_.lo.array() < bounds_.hi.array()).all())
    throw InvalidArgument("workspace: bounds must be finite with lo < hi");
  if (obstacles_.size() > capacity_)
    throw InvalidArgument("workspace: " + std::to_string(obstacles_.size()) + " obstacles exceed capacity " +
                          std::to_string(capacity_));
  for (const BoxObstacle& box : obstacles_) {
    if (!box.center.allFinite() || !box.dims.allFinite() || !(box.dims.array() > 0.0).all())
      throw InvalidArgument("workspace: obstacle dims must be positive and finite");
    const Point3 lo = box.center - 0.5 * box.dims;
    const Point3 hi = box.center + 0.5 * box.dims;
    if ((hi.array() < bounds_.lo.array()).any() || (lo.array() > bounds_.hi.array()).any())
      throw InvalidArgument("workspace: obstacle lies entirely outside bounds");
  }
}

Aabb Workspace::default_bounds() { return Aabb{Point3(-1.5, -1.5, -1.5), Point3(1.5, 1.5, 1.5)}; }

Workspace Workspace::empty(Profile profile) { return Workspace("empty", profile, default_bounds(), {}); }

double segment_box_distance(const Point3& p0, const Point3& p1, const BoxObstacle& box) {
  // The squared distance along the segment is convex and piecewise quadratic,
  // with breaks where a coordinate crosses a slab face. Minimize each piece
  // in closed form.
  const Point3 h = 0.5 * box.dims;
  const Point3 a = p0 - box.center;
  const Point3 d = p1 - p0;

  std::array<double, 8> breaks;
  std::size_t nb = 0;
  breaks[nb++] = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) continue;
    for (double face : {-h[i], h[i]}) {
      const double t = (face - a[i]) / d[i];
      if (t > 0.0 && t < 1.0) breaks[nb++] = t;
    }
  }
  breaks[nb++] = 1.0;
  std::sort(breaks.begin(), breaks.begin() + nb);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < nb; ++k) {
    const double t0 = breaks[k], t1 = breaks[k + 1];
    const double tm = 0.5 * (t0 + t1);
    double qa = 0.0, qb = 0.0, qc = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double x = a[i] + tm * d[i];
      double face;
      if (x < -h[i]) {
        face = -h[i];
      } else if (x > h[i]) {
        face = h[i];
      } else {
        continue;
      }
      const double e = a[i] - face;
      qa += d[i] * d[i];
      qb += 2.0 * e * d[i];
      qc += e * e;
    }
    double t = t0;
    if (qa > 0.0) t = std::clamp(-qb / (2.0 * qa), t0, t1);
    best = std::min(best, (qa * t + qb) * t + qc);
    if (best <= 0.0) return 0.0;
  }
  return std::sqrt(std::max(0.0, best));
}

namespace {

// Lower bound on segment-box distance from the segment's bounding box.
double aabb_gap(const Point3& p0, const Point3& p1, const BoxObstacle& box) {
  const Point3 seg_lo = p0.cwiseMin(p1), seg_hi = p0.cwiseMax(p1);
  const Point3 box_lo = box.center - 0.5 * box.dims, box_hi = box.center + 0.5 * box.dims;
  const Point3 gap = (seg_lo - box_hi).cwiseMax(box_lo - seg_hi).cwiseMax(0.0);
  return gap.norm();
}

double bounds_margin(const Aabb& bounds, const Point3& p, double radius) {
  return std::min((p - bounds.lo).minCoeff(), (bounds.hi - p).minCoeff()) - radius;
}

double clearance_of(const Workspace& ws, const KinematicModel& model, const FrameSet& frames) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kNumJoints; ++k) {
    const Point3& p0 = frames.positions[k];
    const Point3& p1 = frames.positions[k + 1];
    const double r = model.link_radii()[k];
    best = std::min({best, bounds_margin(ws.bounds(), p0, r), bounds_margin(ws.bounds(), p1, r)});
    for (const BoxObstacle& box : ws.obstacles()) {
      if (aabb_gap(p0, p1, box) - r >= best) continue;
      best = std::min(best, segment_box_distance(p0, p1, box) - r);
    }
  }
  return best;
}

JointVector lerp(const JointVector& from, const JointVector& to, double t) {
  JointVector q;
  for (std::size_t i = 0; i < kNumJoints; ++i) q[i] = from[i] + t * (to[i] - from[i]);
  return q;
}

// Below this joint-space interval length, certification falls back to the
// discrete samples.
constexpr double kMinCertifyInterval = 1e-3;

struct Certifier {
  const Workspace& ws;
  const KinematicModel& model;
  const JointVector& from;
  const JointVector& to;
  double length;
  double sweep_per_t;  // displacement bound per unit of t

  bool run(double ta, double ca, double tb, double cb) const {
    if (ca + cb > sweep_per_t * (tb - ta)) return true;
    if ((tb - ta) * length < kMinCertifyInterval) return true;
    const double tm = 0.5 * (ta + tb);
    const double cm = clearance(ws, model, lerp(from, to, tm));
    if (cm < 0.0) return false;
    return run(ta, ca, tm, cm) && run(tm, cm, tb, cb);
  }
};

}  // namespace

double clearance(const Workspace& ws, const KinematicModel& model, const JointVector& q) {
  return clearance_of(ws, model, forward_kinematics(model, q));
}

bool config_in_collision(const Workspace& ws, const KinematicModel& model, const JointVector& q) {
  const FrameSet frames = forward_kinematics(model, q);
  for (std::size_t k = 0; k < kNumJoints; ++k) {
    const Point3& p0 = frames.positions[k];
    const Point3& p1 = frames.positions[k + 1];
    const double r = model.link_radii()[k];
    if (bounds_margin(ws.bounds(), p0, r) < 0.0 || bounds_margin(ws.bounds(), p1, r) < 0.0) return true;
    for (const BoxObstacle& box : ws.obstacles()) {
      if (aabb_gap(p0, p1, box) >= r) continue;
      if (segment_box_distance(p0, p1, box) < r) return true;
    }
  }
  return false;
}

bool motion_valid(const Workspace& ws, const KinematicModel& model, const JointVector& a,
                  const JointVector& b, const MotionCheckParams& params) {
  if (!(params.step > 0.0)) throw InvalidArgument("motion_valid: step must be positive");
  if (!is_finite(a) || !is_finite(b)) throw InvalidArgument("motion_valid: non-finite endpoint");
  // Interpolate from the lexicographically smaller endpoint so that (a, b)
  // and (b, a) evaluate bit-identical samples.
  const bool flip = b < a;
  const JointVector& from = flip ? b : a;
  const JointVector& to = flip ? a : b;

  const double length = distance(from, to);
  if (length == 0.0) return clearance(ws, model, from) >= 0.0;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(length / params.step)));

  double sweep = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j) sweep += std::abs(to[j] - from[j]) * model.swept_radius(j);
  const Certifier certifier{ws, model, from, to, length, sweep};

  // Endpoints first: most rejected motions end in collision.
  const double c0 = clearance(ws, model, from);
  if (c0 < 0.0) return false;
  const double cn = clearance(ws, model, to);
  if (cn < 0.0) return false;

  double prev_t = 0.0, prev_c = c0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    const double c = i == n ? cn : clearance(ws, model, lerp(from, to, t));
    if (c < 0.0) return false;
    if (!certifier.run(prev_t, prev_c, t, c)) return false;
    prev_t = t;
    prev_c = c;
  }
  return true;
}

bool discrete_motion_valid(const Workspace& ws, const KinematicModel& model, const JointVector& a,
                           const JointVector& b, double step) {
  if (!(step > 0.0)) throw InvalidArgument("discrete_motion_valid: step must be positive");
  const double length = distance(a, b);
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(length / step)));
  for (std::size_t i = 0; i <= n; ++i) {
    if (config_in_collision(ws, model, lerp(a, b, static_cast<double>(i) / static_cast<double>(n))))
      return false;
  }
  return true;
}

std::vector<double> obstacle_vector(const Workspace& ws) {
  std::vector<double> out(ws.capacity() * 6, 0.0);
  const Point3 c = ws.bounds().center();
  const Point3 half = ws.bounds().half_extent();
  for (std::size_t k = 0; k < ws.obstacles().size(); ++k) {
    const BoxObstacle& box = ws.obstacles()[k];
    for (int i = 0; i < 3; ++i) {
      out[6 * k + i] = (box.center[i] - c[i]) / half[i];
      out[6 * k + 3 + i] = box.dims[i] / half[i];
    }
  }
  return out;
}

}  // namespace simpnet
