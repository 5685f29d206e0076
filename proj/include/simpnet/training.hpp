#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "simpnet/dataset.hpp"
#include "simpnet/heuristic.hpp"

namespace simpnet {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;
  /// Stop after this many epochs without a better validation loss; 0 disables.
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  FeatureMode feature_mode = FeatureMode::full;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, dropout in train mode
  std::vector<double> val_loss;    // per epoch, dropout off
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  double wall_time = 0.0;
};

nlohmann::json train_report_to_json(const TrainReport& r);

/// Model inputs for a set of pairs: feature rows, obstacle rows, targets in
/// normalized angle units (angle / pi).
struct PairBatch {
  std::size_t count = 0;
  std::vector<double> features;
  std::vector<double> obstacles;
  std::vector<double> targets;
};

PairBatch assemble_pairs(std::span<const TrainingPair> pairs, std::span<const Workspace> worlds,
                         const KinematicModel& model, const HeuristicConfig& config);

/// Mean squared error over all pairs and joints, dropout off.
double evaluate_loss(std::span<const TrainingPair> pairs, std::span<const Workspace> worlds,
                     const KinematicModel& model, const HeuristicWeights& weights);

struct TrainOptions {
  /// Written after every epoch: the current weights at this path plus an
  /// optimizer-state sidecar at "<path>.state".
  std::optional<std::filesystem::path> checkpoint;
  /// Continue from a checkpoint written by an identically configured run.
  std::optional<std::filesystem::path> resume;
  std::function<void(std::size_t epoch, double train_loss, double val_loss)> on_epoch;
};

struct TrainResult {
  HeuristicWeights weights;  // best validation loss
  TrainReport report;
};

TrainResult train(std::span<const TrainingPair> pairs, std::span<const Workspace> worlds,
                  const KinematicModel& model, const TrainConfig& config, const HeuristicConfig& heuristic,
                  const TrainOptions& options = {});

}  // namespace simpnet
