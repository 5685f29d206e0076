#include "simpnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"

namespace simpnet {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Tensor;

void TrainConfig::validate() const {
  if (epochs == 0) throw InvalidArgument("train: epochs must be positive");
  if (batch_size == 0) throw InvalidArgument("train: batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("train: learning_rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("train: validation_fraction must lie in (0, 1)");
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"validation_fraction", c.validation_fraction},
          {"patience", c.patience},
          {"seed", c.seed},
          {"feature_mode", feature_mode_name(c.feature_mode)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.feature_mode = parse_feature_mode(j.value("feature_mode", std::string("full")));
  } catch (const json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

json train_report_to_json(const TrainReport& r) {
  return {{"train_loss", r.train_loss},       {"val_loss", r.val_loss},
          {"best_epoch", r.best_epoch},       {"best_val_loss", r.best_val_loss},
          {"stopped_early", r.stopped_early}, {"wall_time", r.wall_time}};
}

PairBatch assemble_pairs(std::span<const TrainingPair> pairs, std::span<const Workspace> worlds,
                         const KinematicModel& model, const HeuristicConfig& config) {
  std::map<std::string, const Workspace*> by_id;
  for (const Workspace& ws : worlds) by_id[ws.id()] = &ws;
  std::map<std::string, std::vector<double>> obstacle_rows;
  PairBatch b;
  b.count = pairs.size();
  for (const TrainingPair& p : pairs) {
    auto it = by_id.find(p.workspace_id);
    if (it == by_id.end()) throw InvalidArgument("training pair references unknown workspace '" + p.workspace_id + "'");
    const Workspace& ws = *it->second;
    if (ws.capacity() != config.obstacle_capacity)
      throw InvalidArgument("workspace '" + ws.id() + "' has capacity " + std::to_string(ws.capacity()) +
                            ", the heuristic expects " + std::to_string(config.obstacle_capacity));
    auto [row, inserted] = obstacle_rows.try_emplace(ws.id());
    if (inserted) row->second = obstacle_vector(ws);
    const std::vector<double> f = feature_row(config, model, ws.bounds(), p.q_t, p.q_goal);
    b.features.insert(b.features.end(), f.begin(), f.end());
    b.obstacles.insert(b.obstacles.end(), row->second.begin(), row->second.end());
    for (double v : p.target) b.targets.push_back(v / std::numbers::pi);
  }
  return b;
}

namespace {

struct Slices {
  Tensor features, obstacles, targets;
};

Slices slice(const PairBatch& data, const HeuristicConfig& config, std::span<const std::size_t> rows) {
  const std::size_t fw = config.node_count * config.feature_width();
  const std::size_t ow = config.obstacle_capacity * 6;
  const std::size_t tw = config.node_count;
  std::vector<double> f, o, t;
  f.reserve(rows.size() * fw);
  o.reserve(rows.size() * ow);
  t.reserve(rows.size() * tw);
  for (std::size_t r : rows) {
    f.insert(f.end(), data.features.begin() + r * fw, data.features.begin() + (r + 1) * fw);
    o.insert(o.end(), data.obstacles.begin() + r * ow, data.obstacles.begin() + (r + 1) * ow);
    t.insert(t.end(), data.targets.begin() + r * tw, data.targets.begin() + (r + 1) * tw);
  }
  const std::size_t n = rows.size();
  return {Tensor({n, fw}, std::move(f)), Tensor({n, ow}, std::move(o)), Tensor({n, tw}, std::move(t))};
}

constexpr std::size_t kEvalBatch = 256;

double mean_loss(const PairBatch& data, std::span<const std::size_t> rows, const HeuristicWeights& weights,
                 const ManipulatorGraph& graph) {
  if (rows.empty()) throw InvalidArgument("evaluate_loss: no pairs");
  nn::NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t begin = 0; begin < rows.size(); begin += kEvalBatch) {
    const auto part = rows.subspan(begin, std::min(kEvalBatch, rows.size() - begin));
    const Slices s = slice(data, weights.config(), part);
    const Tensor pred = heuristic_forward(weights, graph, s.features, s.obstacles, {});
    const auto p = pred.values();
    const auto t = s.targets.values();
    for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
  }
  return total / static_cast<double>(rows.size() * weights.config().node_count);
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

json moments_to_json(const std::vector<std::vector<double>>& m) { return json(m); }

struct TrainingState {
  std::size_t epoch = 0;
  nn::AdamState adam;
  Rng shuffle_rng;
  Rng dropout_rng;
  TrainReport report;
  std::size_t since_best = 0;
  nn::TensorDocument best;
};

fs::path state_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".state";
  return p;
}

void save_checkpoint(const fs::path& path, const HeuristicWeights& weights, const TrainingState& s,
                     const TrainConfig& config) {
  weights.save(path);
  json state = {{"format", "simpnet-train-state"},
                {"version", 1},
                {"config", train_config_to_json(config)},
                {"heuristic", heuristic_config_to_json(weights.config())},
                {"epoch", s.epoch},
                {"adam",
                 {{"step", s.adam.step},
                  {"lr", s.adam.config.lr},
                  {"m", moments_to_json(s.adam.m)},
                  {"v", moments_to_json(s.adam.v)}}},
                {"shuffle_rng", s.shuffle_rng.state()},
                {"dropout_rng", s.dropout_rng.state()},
                {"report", train_report_to_json(s.report)},
                {"since_best", s.since_best},
                {"best", nn::tensors_to_json(s.best)}};
  write_json_atomic(state_path(path), state);
}

void load_checkpoint(const fs::path& path, HeuristicWeights& weights, TrainingState& s, const TrainConfig& config) {
  const json state = read_json_file(state_path(path));
  expect_document(state, "simpnet-train-state", 1);
  try {
    if (heuristic_config_to_json(heuristic_config_from_json(state.at("heuristic"))) !=
        heuristic_config_to_json(weights.config()))
      throw InvalidArgument("resume: checkpoint was written for a different heuristic config");
    const TrainConfig saved = train_config_from_json(state.at("config"));
    if (saved.seed != config.seed || saved.batch_size != config.batch_size ||
        saved.validation_fraction != config.validation_fraction || saved.learning_rate != config.learning_rate)
      throw InvalidArgument("resume: checkpoint was written with different training settings");
    weights.assign(nn::load_tensor_document(path));
    s.epoch = state.at("epoch").get<std::size_t>();
    s.adam.step = state.at("adam").at("step").get<std::uint64_t>();
    s.adam.m = state.at("adam").at("m").get<std::vector<std::vector<double>>>();
    s.adam.v = state.at("adam").at("v").get<std::vector<std::vector<double>>>();
    if (s.adam.m.size() != weights.parameters().size() || s.adam.v.size() != s.adam.m.size())
      throw FormatError("resume: optimizer state does not match the parameters");
    s.shuffle_rng.set_state(state.at("shuffle_rng").get<std::string>());
    s.dropout_rng.set_state(state.at("dropout_rng").get<std::string>());
    const json& r = state.at("report");
    s.report.train_loss = r.at("train_loss").get<std::vector<double>>();
    s.report.val_loss = r.at("val_loss").get<std::vector<double>>();
    s.report.best_epoch = r.at("best_epoch").get<std::size_t>();
    s.report.best_val_loss = r.at("best_val_loss").get<double>();
    s.report.stopped_early = r.at("stopped_early").get<bool>();
    s.report.wall_time = r.at("wall_time").get<double>();
    s.since_best = state.at("since_best").get<std::size_t>();
    s.best = nn::tensors_from_json(state.at("best"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("training checkpoint: ") + e.what());
  }
}

}  // namespace

double evaluate_loss(std::span<const TrainingPair> pairs, std::span<const Workspace> worlds,
                     const KinematicModel& model, const HeuristicWeights& weights) {
  if (pairs.empty()) throw InvalidArgument("evaluate_loss: no pairs");
  const PairBatch data = assemble_pairs(pairs, worlds, model, weights.config());
  std::vector<std::size_t> rows(pairs.size());
  std::iota(rows.begin(), rows.end(), 0);
  return mean_loss(data, rows, weights, build_graph(model));
}

TrainResult train(std::span<const TrainingPair> pairs, std::span<const Workspace> worlds,
                  const KinematicModel& model, const TrainConfig& config, const HeuristicConfig& heuristic,
                  const TrainOptions& options) {
  config.validate();
  heuristic.validate();
  if (heuristic.feature_mode != config.feature_mode)
    throw InvalidArgument("train: feature mode differs between training and heuristic config");
  if (pairs.empty()) throw InvalidArgument("train: no training pairs");
  const auto started = std::chrono::steady_clock::now();

  const PairBatch data = assemble_pairs(pairs, worlds, model, heuristic);
  const ManipulatorGraph graph = build_graph(model);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(Rng::derive(config.seed, {0}));
  shuffle(order, split_rng);
  std::size_t val_count = static_cast<std::size_t>(std::round(config.validation_fraction * order.size()));
  val_count = std::clamp<std::size_t>(val_count, 1, order.size());
  std::vector<std::size_t> val_rows(order.end() - static_cast<std::ptrdiff_t>(val_count), order.end());
  std::vector<std::size_t> train_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_count));
  // A single pair has to serve both roles.
  if (train_rows.empty()) train_rows = val_rows;
  std::sort(val_rows.begin(), val_rows.end());

  HeuristicWeights weights(heuristic, Rng::derive(config.seed, {1}));
  auto params = weights.parameters();
  TrainingState s{0,
                  nn::adam_init(nn::AdamConfig{config.learning_rate}, params),
                  Rng(Rng::derive(config.seed, {3})),
                  Rng(Rng::derive(config.seed, {2})),
                  {},
                  0,
                  weights.to_document()};
  if (options.resume) {
    load_checkpoint(*options.resume, weights, s, config);
  } else {
    s.report.best_val_loss = std::numeric_limits<double>::infinity();
  }
  const double wall_before = s.report.wall_time;

  std::vector<std::size_t> epoch_rows = train_rows;
  while (s.epoch < config.epochs && !s.report.stopped_early) {
    std::sort(epoch_rows.begin(), epoch_rows.end());
    shuffle(epoch_rows, s.shuffle_rng);
    double epoch_total = 0.0;
    for (std::size_t begin = 0; begin < epoch_rows.size(); begin += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, epoch_rows.size() - begin);
      const Slices batch = slice(data, heuristic, std::span(epoch_rows).subspan(begin, len));
      nn::zero_grad(params);
      try {
        const nn::DropoutContext dropout{heuristic.dropout, nn::DropoutMode::train, &s.dropout_rng};
        const Tensor pred = heuristic_forward(weights, graph, batch.features, batch.obstacles, dropout);
        const Tensor loss = nn::mse_loss(pred, batch.targets);
        nn::backward(loss);
        epoch_total += loss.item() * static_cast<double>(len);
      } catch (const NumericError& e) {
        throw NumericError("training diverged in epoch " + std::to_string(s.epoch) + ": " + e.what());
      }
      nn::adam_step(s.adam, params);
    }
    const double train_loss = epoch_total / static_cast<double>(epoch_rows.size());
    const double val_loss = mean_loss(data, val_rows, weights, graph);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericError("training produced a non-finite loss in epoch " + std::to_string(s.epoch));
    s.report.train_loss.push_back(train_loss);
    s.report.val_loss.push_back(val_loss);
    if (val_loss < s.report.best_val_loss) {
      s.report.best_val_loss = val_loss;
      s.report.best_epoch = s.epoch;
      s.best = weights.to_document();
      s.since_best = 0;
    } else {
      ++s.since_best;
      if (config.patience > 0 && s.since_best >= config.patience) s.report.stopped_early = true;
    }
    ++s.epoch;
    s.report.wall_time =
        wall_before + std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (options.on_epoch) options.on_epoch(s.epoch - 1, train_loss, val_loss);
    if (options.checkpoint) save_checkpoint(*options.checkpoint, weights, s, config);
  }

  HeuristicWeights best(heuristic, 0);
  best.assign(s.best);
  return {std::move(best), std::move(s.report)};
}

}  // namespace simpnet
