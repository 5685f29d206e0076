#include "simpnet/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"

namespace simpnet {

using nn::Tensor;

const char* feature_mode_name(FeatureMode mode) { return mode == FeatureMode::full ? "full" : "relaxed_fk"; }

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "full") return FeatureMode::full;
  if (name == "relaxed_fk" || name == "relaxed") return FeatureMode::relaxed_fk;
  throw InvalidArgument("unknown feature mode '" + name + "'");
}

std::size_t feature_width(FeatureMode mode) {
  return mode == FeatureMode::full ? kFullFeatureWidth : kRelaxedFeatureWidth;
}

ManipulatorGraph ManipulatorGraph::chain(std::size_t n) {
  if (n == 0) throw InvalidArgument("graph: node count must be positive");
  ManipulatorGraph g;
  g.node_count = n;
  g.neighbors.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    g.edges.emplace_back(i, i + 1);
    g.neighbors[i].push_back(i + 1);
    g.neighbors[i + 1].push_back(i);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

ManipulatorGraph build_graph(const KinematicModel& model) {
  if (model.dh().size() != kNumJoints)
    throw InvalidArgument("build_graph: expected " + std::to_string(kNumJoints) + " joints");
  return ManipulatorGraph::chain(model.dh().size());
}

NodeFeatureMatrix node_features(FeatureMode mode, const JointVector& q_t, const JointVector& q_goal,
                                const std::array<Point3, kNumJoints>& x_t,
                                const std::array<Point3, kNumJoints>& x_goal, const Aabb& bounds) {
  if (!is_finite(q_t) || !is_finite(q_goal)) throw InvalidArgument("node_features: non-finite joint vector");
  NodeFeatureMatrix f;
  f.mode = mode;
  f.node_count = kNumJoints;
  f.width = feature_width(mode);
  f.values.reserve(f.node_count * f.width);
  const Point3 center = bounds.center();
  const Point3 half = bounds.half_extent();
  constexpr double inv_pi = 1.0 / std::numbers::pi;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (mode == FeatureMode::full) {
      if (!x_t[i].allFinite() || !x_goal[i].allFinite())
        throw InvalidArgument("node_features: non-finite joint position");
      const Point3 xt = (x_t[i] - center).cwiseQuotient(half);
      const Point3 xg = (x_goal[i] - center).cwiseQuotient(half);
      const Point3 diff = (xg - xt).cwiseAbs();
      for (int k = 0; k < 3; ++k) f.values.push_back(xt[k]);
      for (int k = 0; k < 3; ++k) f.values.push_back(xg[k]);
      for (int k = 0; k < 3; ++k) f.values.push_back(diff[k]);
      f.values.push_back(diff.norm());
    }
    const double qt = q_t[i] * inv_pi, qg = q_goal[i] * inv_pi;
    f.values.push_back(qt);
    f.values.push_back(qg);
    f.values.push_back(std::abs(qt - qg));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Config

namespace {

nn::MLPSpec spec(std::vector<std::size_t> widths, bool final_activation) {
  return nn::MLPSpec{std::move(widths), nn::Activation::prelu, final_activation};
}

void expect_widths(const nn::MLPSpec& s, const char* name, std::size_t in, std::size_t out) {
  if (s.widths.size() < 2) throw InvalidArgument(std::string("heuristic config: ") + name + " needs >= 2 widths");
  if (s.widths.front() != in || s.widths.back() != out)
    throw InvalidArgument(std::string("heuristic config: ") + name + " must map " + std::to_string(in) + " -> " +
                          std::to_string(out) + ", got " + std::to_string(s.widths.front()) + " -> " +
                          std::to_string(s.widths.back()));
}

nlohmann::json spec_to_json(const nn::MLPSpec& s) {
  return {{"widths", s.widths},
          {"activation", s.activation == nn::Activation::relu ? "relu" : "prelu"},
          {"final_activation", s.final_activation}};
}

nn::MLPSpec spec_from_json(const nlohmann::json& j) {
  nn::MLPSpec s;
  s.widths = j.at("widths").get<std::vector<std::size_t>>();
  const std::string act = j.value("activation", "prelu");
  if (act == "relu") {
    s.activation = nn::Activation::relu;
  } else if (act == "prelu") {
    s.activation = nn::Activation::prelu;
  } else {
    throw FormatError("unknown activation '" + act + "'");
  }
  s.final_activation = j.value("final_activation", false);
  return s;
}

}  // namespace

HeuristicConfig HeuristicConfig::defaults(FeatureMode mode, std::size_t obstacle_capacity) {
  HeuristicConfig c;
  c.feature_mode = mode;
  c.obstacle_capacity = obstacle_capacity;
  const std::size_t n = c.node_count, h = c.hidden;
  c.mlp_i = spec({n * c.feature_width(), 256, n * h}, true);
  c.mlp_ii = spec({obstacle_capacity * 6, 256, n * h}, true);
  c.query = spec({h, c.key_width}, false);
  c.key = spec({h, c.key_width}, false);
  c.value = spec({h, h}, false);
  c.edge = spec({2 * h, 64, h}, true);
  c.node = spec({2 * h, 64, h}, true);
  c.head = spec({h, 32, 1}, false);
  return c;
}

HeuristicConfig HeuristicConfig::tiny(FeatureMode mode, std::size_t obstacle_capacity, std::size_t hidden) {
  HeuristicConfig c;
  c.feature_mode = mode;
  c.obstacle_capacity = obstacle_capacity;
  c.hidden = hidden;
  c.key_width = hidden;
  const std::size_t n = c.node_count, h = hidden;
  c.mlp_i = spec({n * c.feature_width(), 2 * h, n * h}, true);
  c.mlp_ii = spec({obstacle_capacity * 6, 2 * h, n * h}, true);
  c.query = spec({h, h}, false);
  c.key = spec({h, h}, false);
  c.value = spec({h, h}, false);
  c.edge = spec({2 * h, h, h}, true);
  c.node = spec({2 * h, h, h}, true);
  c.head = spec({h, h, 1}, false);
  return c;
}

void HeuristicConfig::validate() const {
  if (node_count == 0 || hidden == 0 || key_width == 0 || obstacle_capacity == 0)
    throw InvalidArgument("heuristic config: sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("heuristic config: dropout must lie in [0, 1)");
  const std::size_t n = node_count, h = hidden;
  expect_widths(mlp_i, "mlp_i", n * feature_width(), n * h);
  expect_widths(mlp_ii, "mlp_ii", obstacle_capacity * 6, n * h);
  expect_widths(query, "query", h, key_width);
  expect_widths(key, "key", h, key_width);
  expect_widths(value, "value", h, h);
  expect_widths(edge, "edge", 2 * h, h);
  expect_widths(node, "node", 2 * h, h);
  expect_widths(head, "head", h, 1);
}

nlohmann::json heuristic_config_to_json(const HeuristicConfig& c) {
  return {{"feature_mode", feature_mode_name(c.feature_mode)},
          {"node_count", c.node_count},
          {"hidden", c.hidden},
          {"key_width", c.key_width},
          {"obstacle_capacity", c.obstacle_capacity},
          {"dropout", c.dropout},
          {"mlp_i", spec_to_json(c.mlp_i)},
          {"mlp_ii", spec_to_json(c.mlp_ii)},
          {"query", spec_to_json(c.query)},
          {"key", spec_to_json(c.key)},
          {"value", spec_to_json(c.value)},
          {"edge", spec_to_json(c.edge)},
          {"node", spec_to_json(c.node)},
          {"head", spec_to_json(c.head)}};
}

HeuristicConfig heuristic_config_from_json(const nlohmann::json& j) {
  try {
    const FeatureMode mode = parse_feature_mode(j.value("feature_mode", "full"));
    const std::size_t capacity = j.value("obstacle_capacity", std::size_t{6});
    const std::string preset = j.value("preset", "default");
    if (preset == "tiny") {
      HeuristicConfig c = HeuristicConfig::tiny(mode, capacity, j.value("hidden", std::size_t{8}));
      c.dropout = j.value("dropout", c.dropout);
      c.validate();
      return c;
    }
    if (preset != "default") throw InvalidArgument("heuristic config: unknown preset '" + preset + "'");
    HeuristicConfig c = HeuristicConfig::defaults(mode, capacity);
    c.node_count = j.value("node_count", c.node_count);
    c.hidden = j.value("hidden", c.hidden);
    c.key_width = j.value("key_width", c.key_width);
    c.dropout = j.value("dropout", c.dropout);
    if (!j.contains("mlp_i")) {
      // No explicit layer specs: rebuild the default stack at the stored sizes.
      const std::size_t n = c.node_count, h = c.hidden;
      c.mlp_i = spec({n * c.feature_width(), 256, n * h}, true);
      c.mlp_ii = spec({capacity * 6, 256, n * h}, true);
      c.query = spec({h, c.key_width}, false);
      c.key = spec({h, c.key_width}, false);
      c.value = spec({h, h}, false);
      c.edge = spec({2 * h, 64, h}, true);
      c.node = spec({2 * h, 64, h}, true);
      c.head = spec({h, 32, 1}, false);
    } else {
      c.mlp_i = spec_from_json(j.at("mlp_i"));
      c.mlp_ii = spec_from_json(j.at("mlp_ii"));
      c.query = spec_from_json(j.at("query"));
      c.key = spec_from_json(j.at("key"));
      c.value = spec_from_json(j.at("value"));
      c.edge = spec_from_json(j.at("edge"));
      c.node = spec_from_json(j.at("node"));
      c.head = spec_from_json(j.at("head"));
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("heuristic config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Weights

HeuristicWeights::HeuristicWeights(const HeuristicConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng init(seed);
  mlp_i = nn::MLP("mlp_i", config_.mlp_i, init);
  mlp_ii = nn::MLP("mlp_ii", config_.mlp_ii, init);
  query = nn::MLP("query", config_.query, init);
  key = nn::MLP("key", config_.key, init);
  value = nn::MLP("value", config_.value, init);
  edge = nn::MLP("edge", config_.edge, init);
  node = nn::MLP("node", config_.node, init);
  head = nn::MLP("head", config_.head, init);
}

std::vector<nn::Parameter*> HeuristicWeights::parameters() {
  std::vector<nn::Parameter*> out;
  for (nn::MLP* m : {&mlp_i, &mlp_ii, &query, &key, &value, &edge, &node, &head}) {
    auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const nn::Parameter*> HeuristicWeights::parameters() const {
  auto mut = const_cast<HeuristicWeights*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

nn::TensorDocument HeuristicWeights::to_document() const {
  auto params = parameters();
  nn::TensorDocument doc = nn::collect_parameters(params);
  doc.metadata = {{"heuristic", heuristic_config_to_json(config_)}};
  return doc;
}

void HeuristicWeights::assign(const nn::TensorDocument& doc) {
  auto params = parameters();
  nn::assign_parameters(params, doc);
}

HeuristicWeights HeuristicWeights::clone() const {
  HeuristicWeights copy(config_, 0);
  copy.assign(to_document());
  return copy;
}

void HeuristicWeights::save(const std::filesystem::path& path) const { nn::save_tensor_document(path, to_document()); }

HeuristicWeights HeuristicWeights::load(const std::filesystem::path& path) {
  const nn::TensorDocument doc = nn::load_tensor_document(path);
  if (!doc.metadata.contains("heuristic"))
    throw FormatError("weight file '" + path.string() + "' carries no heuristic config");
  HeuristicWeights w(heuristic_config_from_json(doc.metadata["heuristic"]), 0);
  w.assign(doc);
  return w;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

nn::DropoutContext without_dropout() { return {}; }

Tensor fuse_projected(const HeuristicWeights& w, const Tensor& v, const Tensor& keys, const Tensor& values) {
  const std::size_t n = w.config().node_count, h = w.config().hidden;
  const std::size_t batch = v.rows();
  const Tensor rows = nn::reshape(v, {batch * n, h});
  const Tensor q = w.query.forward(rows);
  const Tensor attended = nn::scaled_dot_attention(q, keys, values, n);
  return nn::reshape(nn::add(attended, rows), {batch, n * h});
}

void project_workspace(const HeuristicWeights& w, const Tensor& o, Tensor& keys, Tensor& values) {
  const std::size_t n = w.config().node_count, h = w.config().hidden;
  const Tensor rows = nn::reshape(o, {o.rows() * n, h});
  keys = w.key.forward(rows);
  values = w.value.forward(rows);
}

}  // namespace

Embeddings encode(const HeuristicWeights& w, const Tensor& features, const Tensor& obstacles,
                  const nn::DropoutContext& dropout) {
  const HeuristicConfig& c = w.config();
  if (features.cols() != c.node_count * c.feature_width())
    throw InvalidArgument("encode: feature width " + std::to_string(features.cols()) + " does not match config");
  if (obstacles.cols() != c.obstacle_capacity * 6)
    throw InvalidArgument("encode: obstacle vector width " + std::to_string(obstacles.cols()) +
                          " does not match config");
  if (features.rows() != obstacles.rows()) throw InvalidArgument("encode: batch sizes differ");
  return {w.mlp_i.forward(features, dropout), w.mlp_ii.forward(obstacles, without_dropout())};
}

Tensor fuse(const HeuristicWeights& w, const Tensor& v, const Tensor& o) {
  const HeuristicConfig& c = w.config();
  const std::size_t width = c.node_count * c.hidden;
  if (v.cols() != width || o.cols() != width || v.rows() != o.rows())
    throw InvalidArgument("fuse: embeddings must both be B x " + std::to_string(width));
  Tensor keys, values;
  project_workspace(w, o, keys, values);
  return fuse_projected(w, v, keys, values);
}

Tensor message_pass(const HeuristicWeights& w, const ManipulatorGraph& graph, const Tensor& per_node,
                    const nn::DropoutContext& dropout) {
  const std::size_t n = graph.node_count;
  if (per_node.cols() != w.config().hidden || per_node.rows() % n != 0)
    throw InvalidArgument("message_pass: expected (B * " + std::to_string(n) + ") x " +
                          std::to_string(w.config().hidden) + " node rows");
  const std::size_t batch = per_node.rows() / n;
  std::vector<std::size_t> receiver, sender;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j : graph.neighbors[i]) {
        receiver.push_back(b * n + i);
        sender.push_back(b * n + j);
      }
  Tensor aggregate;
  if (receiver.empty()) {
    aggregate = Tensor::zeros({per_node.rows(), per_node.cols()});
  } else {
    const Tensor pairs = nn::concat_cols(nn::gather_rows(per_node, receiver), nn::gather_rows(per_node, sender));
    const Tensor messages = w.edge.forward(pairs, dropout);
    aggregate = nn::scatter_add_rows(messages, receiver, per_node.rows());
  }
  return w.node.forward(nn::concat_cols(per_node, aggregate), dropout);
}

Tensor heuristic_forward(const HeuristicWeights& w, const ManipulatorGraph& graph, const Tensor& features,
                         const Tensor& obstacles, const nn::DropoutContext& dropout) {
  const HeuristicConfig& c = w.config();
  if (graph.node_count != c.node_count) throw InvalidArgument("heuristic_forward: graph does not match config");
  const Embeddings e = encode(w, features, obstacles, dropout);
  const Tensor fused = fuse(w, e.v, e.o);
  const std::size_t batch = features.rows();
  const Tensor nodes = message_pass(w, graph, nn::reshape(fused, {batch * c.node_count, c.hidden}), dropout);
  return nn::reshape(w.head.forward(nodes, dropout), {batch, c.node_count});
}

std::vector<double> feature_row(const HeuristicConfig& config, const KinematicModel& model, const Aabb& bounds,
                                const JointVector& q_t, const JointVector& q_goal) {
  std::array<Point3, kNumJoints> x_t{}, x_goal{};
  if (config.feature_mode == FeatureMode::full) {
    x_t = joint_positions(model, q_t);
    x_goal = joint_positions(model, q_goal);
  } else {
    for (auto& p : x_t) p.setZero();
    for (auto& p : x_goal) p.setZero();
  }
  return node_features(config.feature_mode, q_t, q_goal, x_t, x_goal, bounds).values;
}

HeuristicSampler::HeuristicSampler(const HeuristicWeights& weights, const Workspace& ws, const KinematicModel& model)
    : weights_(weights), ws_(ws), model_(model), graph_(build_graph(model)) {
  const HeuristicConfig& c = weights_.config();
  if (ws_.capacity() != c.obstacle_capacity)
    throw InvalidArgument("heuristic: workspace capacity " + std::to_string(ws_.capacity()) +
                          " does not match the weights' obstacle capacity " + std::to_string(c.obstacle_capacity));
  nn::NoGradGuard no_grad;
  const Tensor obstacles({1, c.obstacle_capacity * 6}, obstacle_vector(ws_));
  const Tensor o = weights_.mlp_ii.forward(obstacles);
  project_workspace(weights_, o, keys_, values_);
}

JointVector HeuristicSampler::next(const JointVector& q_t, const JointVector& q_goal, Rng& rng,
                                   nn::DropoutMode mode) const {
  const HeuristicConfig& c = weights_.config();
  nn::NoGradGuard no_grad;
  const nn::DropoutContext dropout{c.dropout, mode, &rng};
  const Tensor features({1, c.node_count * c.feature_width()}, feature_row(c, model_, ws_.bounds(), q_t, q_goal));
  const Tensor v = weights_.mlp_i.forward(features, dropout);
  const Tensor fused = fuse_projected(weights_, v, keys_, values_);
  const Tensor nodes = message_pass(weights_, graph_, nn::reshape(fused, {c.node_count, c.hidden}), dropout);
  const Tensor out = weights_.head.forward(nodes, dropout);
  JointVector q;
  for (std::size_t i = 0; i < kNumJoints; ++i) q[i] = out.values()[i] * std::numbers::pi;
  return model_.clamp(q);
}

JointVector sample_next(const JointVector& q_t, const JointVector& q_goal, const Workspace& ws,
                        const KinematicModel& model, const HeuristicWeights& weights, Rng& rng,
                        nn::DropoutMode mode) {
  return HeuristicSampler(weights, ws, model).next(q_t, q_goal, rng, mode);
}

}  // namespace simpnet
