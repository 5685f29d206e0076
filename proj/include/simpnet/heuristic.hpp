#pragma once

// Learned sampling heuristic: kinematic-chain graph over the joints, node
// features from current/goal configurations (optionally with their joint
// positions), an MLP embedding of configuration and of the obstacle list,
// cross-attention fusing the two, one round of message passing, and a
// per-node head emitting the next joint angle. Dropout stays active while
// sampling, which makes repeated calls yield different samples.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "simpnet/kinematics.hpp"
#include "simpnet/nn.hpp"
#include "simpnet/world.hpp"

namespace simpnet {

enum class FeatureMode { full, relaxed_fk };

inline constexpr std::size_t kFullFeatureWidth = 13;
inline constexpr std::size_t kRelaxedFeatureWidth = 3;

const char* feature_mode_name(FeatureMode mode);
FeatureMode parse_feature_mode(const std::string& name);
std::size_t feature_width(FeatureMode mode);

/// Undirected graph; neighbors[i] is N(i) in the order its messages are summed.
struct ManipulatorGraph {
  std::size_t node_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<std::size_t>> neighbors;

  /// Chain 0 - 1 - ... - (n-1).
  static ManipulatorGraph chain(std::size_t n);
};

/// One node per joint, edges along the kinematic chain from base to wrist.
ManipulatorGraph build_graph(const KinematicModel& model);

/// Row-major node_count x width.
struct NodeFeatureMatrix {
  FeatureMode mode = FeatureMode::full;
  std::size_t node_count = 0;
  std::size_t width = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * width, width}; }
};

/// Full mode per node: [x_t, x_goal, |x_goal - x_t|, ||x_goal - x_t||, q_t, q_goal, |q_t - q_goal|]
/// with positions normalized by the bounds (relative to the center, divided
/// by the half-extent) and angles divided by pi. Relaxed mode keeps only the
/// three angle terms and ignores the positions.
NodeFeatureMatrix node_features(FeatureMode mode, const JointVector& q_t, const JointVector& q_goal,
                                const std::array<Point3, kNumJoints>& x_t,
                                const std::array<Point3, kNumJoints>& x_goal, const Aabb& bounds);

struct HeuristicConfig {
  FeatureMode feature_mode = FeatureMode::full;
  std::size_t node_count = kNumJoints;
  std::size_t hidden = 32;  // per-node width d_h
  std::size_t key_width = 64;
  std::size_t obstacle_capacity = 6;
  double dropout = 0.1;
  nn::MLPSpec mlp_i;
  nn::MLPSpec mlp_ii;
  nn::MLPSpec query;
  nn::MLPSpec key;
  nn::MLPSpec value;
  nn::MLPSpec edge;
  nn::MLPSpec node;
  nn::MLPSpec head;

  static HeuristicConfig defaults(FeatureMode mode, std::size_t obstacle_capacity);
  /// Small widths everywhere (d_h = hidden), for tests.
  static HeuristicConfig tiny(FeatureMode mode, std::size_t obstacle_capacity, std::size_t hidden);

  std::size_t feature_width() const { return simpnet::feature_width(feature_mode); }
  /// Throws InvalidArgument when the widths do not chain together.
  void validate() const;
};

nlohmann::json heuristic_config_to_json(const HeuristicConfig& c);
HeuristicConfig heuristic_config_from_json(const nlohmann::json& j);

/// Every trainable tensor of the heuristic. Move-only: parameters are
/// handles, so copies would alias; use clone() for a deep copy.
class HeuristicWeights {
 public:
  HeuristicWeights(const HeuristicConfig& config, std::uint64_t seed);
  HeuristicWeights(HeuristicWeights&&) = default;
  HeuristicWeights& operator=(HeuristicWeights&&) = default;
  HeuristicWeights(const HeuristicWeights&) = delete;
  HeuristicWeights& operator=(const HeuristicWeights&) = delete;

  const HeuristicConfig& config() const { return config_; }
  HeuristicWeights clone() const;

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  nn::TensorDocument to_document() const;
  void assign(const nn::TensorDocument& doc);

  /// Weight file with the config stored in its metadata.
  void save(const std::filesystem::path& path) const;
  static HeuristicWeights load(const std::filesystem::path& path);

  nn::MLP mlp_i;   // node features -> configuration embedding
  nn::MLP mlp_ii;  // obstacle vector -> workspace embedding
  nn::MLP query;
  nn::MLP key;
  nn::MLP value;
  nn::MLP edge;  // message function
  nn::MLP node;  // update function
  nn::MLP head;  // per-node angle

 private:
  HeuristicConfig config_;
};

struct Embeddings {
  nn::Tensor v;  // B x (n_v * d_h)
  nn::Tensor o;  // B x (n_v * d_h)
};

/// features: B x (n_v * feature_width), obstacles: B x (capacity * 6).
Embeddings encode(const HeuristicWeights& w, const nn::Tensor& features, const nn::Tensor& obstacles,
                  const nn::DropoutContext& dropout);

/// Cross-attention of per-node configuration rows over per-node workspace
/// rows, plus the residual v. Both inputs B x (n_v * d_h); same output shape.
nn::Tensor fuse(const HeuristicWeights& w, const nn::Tensor& v, const nn::Tensor& o);

/// One message-passing round with sum aggregation over (B * n) x d_h rows,
/// where n = graph.node_count and rows are grouped per batch element.
nn::Tensor message_pass(const HeuristicWeights& w, const ManipulatorGraph& graph, const nn::Tensor& per_node,
                        const nn::DropoutContext& dropout);

/// Full pipeline to normalized angles (angle / pi), B x n_v.
nn::Tensor heuristic_forward(const HeuristicWeights& w, const ManipulatorGraph& graph, const nn::Tensor& features,
                             const nn::Tensor& obstacles, const nn::DropoutContext& dropout);

/// Flattened node features for one query, ready to be a batch row.
std::vector<double> feature_row(const HeuristicConfig& config, const KinematicModel& model, const Aabb& bounds,
                                const JointVector& q_t, const JointVector& q_goal);

/// Per-query inference state: caches the workspace embedding and its
/// key/value projections (no dropout sits on that path).
class HeuristicSampler {
 public:
  HeuristicSampler(const HeuristicWeights& weights, const Workspace& ws, const KinematicModel& model);

  /// Next configuration toward q_goal, denormalized and clamped to limits.
  JointVector next(const JointVector& q_t, const JointVector& q_goal, Rng& rng,
                   nn::DropoutMode mode = nn::DropoutMode::sample) const;

 private:
  const HeuristicWeights& weights_;
  const Workspace& ws_;
  const KinematicModel& model_;
  ManipulatorGraph graph_;
  nn::Tensor keys_;
  nn::Tensor values_;
};

JointVector sample_next(const JointVector& q_t, const JointVector& q_goal, const Workspace& ws,
                        const KinematicModel& model, const HeuristicWeights& weights, Rng& rng,
                        nn::DropoutMode mode = nn::DropoutMode::sample);

}  // namespace simpnet
