#pragma once

// Independent reference implementations used by the tests. None of these
// share code with the library beyond its plain data types.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "simpnet/dataset.hpp"
#include "simpnet/heuristic.hpp"
#include "simpnet/kinematics.hpp"
#include "simpnet/world.hpp"

namespace oracle {

using Vec3 = std::array<double, 3>;

/// Frame origins by multiplying explicit 4x4 elementary transforms
/// Rz(theta) Tz(d) Tx(a) Rx(alpha) in plain arrays.
std::array<Vec3, 7> fk_positions(const simpnet::KinematicModel& model, const simpnet::JointVector& q);

double point_box_distance(const Vec3& p, const simpnet::BoxObstacle& box);

/// Minimum point-box distance over samples spaced at most `spacing` along the segment.
double sampled_segment_box_distance(const Vec3& p0, const Vec3& p1, const simpnet::BoxObstacle& box,
                                    double spacing);

struct SampledClearance {
  double clearance;  // min over links of sampled distance - radius, and bounds margins
};

SampledClearance sampled_clearance(const simpnet::Workspace& ws, const simpnet::KinematicModel& model,
                                   const simpnet::JointVector& q, double spacing);

/// Central finite difference of f with respect to x[i].
double central_difference(const std::function<double()>& f, double& x, double h);

/// Relative error |a - b| / max(|a|, |b|, floor).
double rel_err(double a, double b, double floor = 1e-8);

/// Worst rel_err between backward() and central differences over every
/// input entry, for the scalar sum(f(inputs) * w) with fixed random w.
double max_grad_error(const std::function<simpnet::nn::Tensor(const std::vector<simpnet::nn::Tensor>&)>& f,
                      std::vector<simpnet::nn::Tensor> inputs, double h = 1e-5, double floor = 1e-3);

/// Mean squared error of the heuristic over pairs, one forward pass per pair
/// with no batching.
double per_pair_loss(std::span<const simpnet::TrainingPair> pairs, std::span<const simpnet::Workspace> worlds,
                     const simpnet::KinematicModel& model, const simpnet::HeuristicWeights& weights);

}  // namespace oracle
