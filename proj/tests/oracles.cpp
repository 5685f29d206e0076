#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace oracle {

namespace {

using Mat4 = std::array<std::array<double, 4>, 4>;

Mat4 identity() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Mat4 rot_z(double t) {
  Mat4 m = identity();
  m[0][0] = std::cos(t);
  m[0][1] = -std::sin(t);
  m[1][0] = std::sin(t);
  m[1][1] = std::cos(t);
  return m;
}

Mat4 rot_x(double t) {
  Mat4 m = identity();
  m[1][1] = std::cos(t);
  m[1][2] = -std::sin(t);
  m[2][1] = std::sin(t);
  m[2][2] = std::cos(t);
  return m;
}

Mat4 trans(double x, double y, double z) {
  Mat4 m = identity();
  m[0][3] = x;
  m[1][3] = y;
  m[2][3] = z;
  return m;
}

}  // namespace

std::array<Vec3, 7> fk_positions(const simpnet::KinematicModel& model, const simpnet::JointVector& q) {
  Mat4 t{};
  const auto& base = model.base_pose().matrix();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t[i][j] = base(i, j);
  std::array<Vec3, 7> out{};
  out[0] = {t[0][3], t[1][3], t[2][3]};
  for (std::size_t k = 0; k < 6; ++k) {
    const simpnet::DHRow& r = model.dh()[k];
    t = mul(t, rot_z(q[k] + r.theta_offset));
    t = mul(t, trans(0, 0, r.d));
    t = mul(t, trans(r.a, 0, 0));
    t = mul(t, rot_x(r.alpha));
    out[k + 1] = {t[0][3], t[1][3], t[2][3]};
  }
  return out;
}

double point_box_distance(const Vec3& p, const simpnet::BoxObstacle& box) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double lo = box.center[i] - box.dims[i] / 2, hi = box.center[i] + box.dims[i] / 2;
    const double d = p[i] < lo ? lo - p[i] : (p[i] > hi ? p[i] - hi : 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

double sampled_segment_box_distance(const Vec3& p0, const Vec3& p1, const simpnet::BoxObstacle& box,
                                    double spacing) {
  double len = 0.0;
  for (int i = 0; i < 3; ++i) len += (p1[i] - p0[i]) * (p1[i] - p0[i]);
  len = std::sqrt(len);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
  double best = 1e300;
  for (int s = 0; s <= n; ++s) {
    const double t = static_cast<double>(s) / n;
    const Vec3 p{p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]), p0[2] + t * (p1[2] - p0[2])};
    best = std::min(best, point_box_distance(p, box));
  }
  return best;
}

SampledClearance sampled_clearance(const simpnet::Workspace& ws, const simpnet::KinematicModel& model,
                                   const simpnet::JointVector& q, double spacing) {
  const auto pos = fk_positions(model, q);
  double best = 1e300;
  const auto& b = ws.bounds();
  for (std::size_t k = 0; k < 6; ++k) {
    const double r = model.link_radii()[k];
    for (const Vec3* p : {&pos[k], &pos[k + 1]})
      for (int i = 0; i < 3; ++i) best = std::min({best, (*p)[i] - b.lo[i] - r, b.hi[i] - (*p)[i] - r});
    for (const auto& box : ws.obstacles())
      best = std::min(best, sampled_segment_box_distance(pos[k], pos[k + 1], box, spacing) - r);
  }
  return {best};
}

double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double fp = f();
  x = saved - h;
  const double fm = f();
  x = saved;
  return (fp - fm) / (2 * h);
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_grad_error(const std::function<simpnet::nn::Tensor(const std::vector<simpnet::nn::Tensor>&)>& f,
                      std::vector<simpnet::nn::Tensor> inputs, double h, double floor) {
  using simpnet::nn::Tensor;
  simpnet::Rng r(1);
  const Tensor probe = f(inputs);
  std::vector<double> w(probe.size());
  for (double& x : w) x = r.normal();
  const Tensor weights(probe.shape(), w);
  auto loss = [&] { return simpnet::nn::sum(simpnet::nn::mul(f(inputs), weights)); };
  for (auto& t : inputs) t.zero_grad();
  simpnet::nn::backward(loss());
  double worst = 0.0;
  for (auto& t : inputs)
    for (std::size_t i = 0; i < t.size(); ++i) {
      double& x = t.mutable_values()[i];
      const double fd = central_difference([&] { return loss().item(); }, x, h);
      worst = std::max(worst, rel_err(t.grad()[i], fd, floor));
    }
  return worst;
}

double per_pair_loss(std::span<const simpnet::TrainingPair> pairs, std::span<const simpnet::Workspace> worlds,
                     const simpnet::KinematicModel& model, const simpnet::HeuristicWeights& weights) {
  using simpnet::nn::Tensor;
  simpnet::nn::NoGradGuard no_grad;
  const auto& c = weights.config();
  const auto graph = simpnet::build_graph(model);
  double total = 0.0;
  for (const auto& p : pairs) {
    const simpnet::Workspace* ws = nullptr;
    for (const auto& w : worlds)
      if (w.id() == p.workspace_id) ws = &w;
    const Tensor f({1, c.node_count * c.feature_width()},
                   simpnet::feature_row(c, model, ws->bounds(), p.q_t, p.q_goal));
    const Tensor o({1, c.obstacle_capacity * 6}, simpnet::obstacle_vector(*ws));
    const Tensor pred = simpnet::heuristic_forward(weights, graph, f, o, {});
    for (std::size_t j = 0; j < c.node_count; ++j) {
      const double e = pred.values()[j] - p.target[j] / std::numbers::pi;
      total += e * e;
    }
  }
  return total / static_cast<double>(pairs.size() * c.node_count);
}

}  // namespace oracle
