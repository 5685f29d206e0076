#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "simpnet/error.hpp"
#include "simpnet/training.hpp"

using namespace simpnet;
namespace fs = std::filesystem;

namespace {

struct Data {
  KinematicModel model = KinematicModel::ur5e();
  std::vector<Workspace> worlds = generate_suite("t", Profile::simple, 2, 3, model).worlds;
  std::vector<TrainingPair> pairs;

  Data() {
    Rng r(71);
    for (int i = 0; i < 60; ++i) {
      TrainingPair p;
      p.workspace_id = worlds[i % 2].id();
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        p.q_t[j] = r.uniform(-2, 2);
        p.q_goal[j] = r.uniform(-2, 2);
        p.target[j] = 0.7 * p.q_t[j] + 0.3 * p.q_goal[j];
      }
      pairs.push_back(p);
    }
  }
};

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.learning_rate = 3e-3;
  c.seed = 5;
  return c;
}

bool same_weights(const HeuristicWeights& a, const HeuristicWeights& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto va = pa[i]->value.values(), vb = pb[i]->value.values();
    if (!std::equal(va.begin(), va.end(), vb.begin(), vb.end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("batched loss equals the per-pair sum") {
  Data d;
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 1);
  const double batched = evaluate_loss(d.pairs, d.worlds, d.model, w);
  const double naive = oracle::per_pair_loss(d.pairs, d.worlds, d.model, w);
  CHECK(std::abs(batched - naive) < 1e-12);
}

TEST_CASE("assembled targets are normalized angles") {
  Data d;
  const HeuristicConfig c = HeuristicConfig::tiny(FeatureMode::relaxed_fk, 6, 8);
  const PairBatch b = assemble_pairs(d.pairs, d.worlds, d.model, c);
  CHECK(b.count == d.pairs.size());
  CHECK(b.features.size() == d.pairs.size() * 18);
  CHECK(b.obstacles.size() == d.pairs.size() * 36);
  CHECK(b.targets[7] == doctest::Approx(d.pairs[1].target[1] / std::numbers::pi));
  std::vector<TrainingPair> stray{d.pairs[0]};
  stray[0].workspace_id = "nowhere";
  CHECK_THROWS_AS(assemble_pairs(stray, d.worlds, d.model, c), InvalidArgument);
}

TEST_CASE("training lowers the validation loss and is reproducible") {
  Data d;
  const HeuristicConfig h = HeuristicConfig::tiny(FeatureMode::full, 6, 8);
  const TrainResult a = train(d.pairs, d.worlds, d.model, quick(25), h);
  const TrainResult b = train(d.pairs, d.worlds, d.model, quick(25), h);
  CHECK(a.report.val_loss.size() == 25);
  CHECK(a.report.best_val_loss < a.report.val_loss.front());
  CHECK(a.report.best_val_loss == a.report.val_loss[a.report.best_epoch]);
  CHECK(same_weights(a.weights, b.weights));
  CHECK(a.report.train_loss == b.report.train_loss);
}

TEST_CASE("resuming from a checkpoint is bit-identical") {
  Data d;
  const HeuristicConfig h = HeuristicConfig::tiny(FeatureMode::full, 6, 8);
  const fs::path ck = fs::temp_directory_path() / "simpnet_ck.json";
  const TrainResult straight = train(d.pairs, d.worlds, d.model, quick(6), h);
  TrainOptions first;
  first.checkpoint = ck;
  train(d.pairs, d.worlds, d.model, quick(3), h, first);
  TrainOptions second;
  second.resume = ck;
  const TrainResult resumed = train(d.pairs, d.worlds, d.model, quick(6), h, second);
  CHECK(resumed.report.train_loss == straight.report.train_loss);
  CHECK(resumed.report.val_loss == straight.report.val_loss);
  CHECK(same_weights(resumed.weights, straight.weights));

  TrainConfig other = quick(6);
  other.seed = 6;
  CHECK_THROWS_AS(train(d.pairs, d.worlds, d.model, other, h, second), InvalidArgument);
  fs::remove(ck);
  fs::remove(ck.string() + ".state");
}

TEST_CASE("patience stops a stalled run") {
  Data d;
  const HeuristicConfig h = HeuristicConfig::tiny(FeatureMode::full, 6, 8);
  TrainConfig c = quick(200);
  c.learning_rate = 1e-300;  // updates vanish below the weights' precision
  c.patience = 3;
  const TrainResult r = train(d.pairs, d.worlds, d.model, c, h);
  CHECK(r.report.stopped_early);
  CHECK(r.report.val_loss.size() < 200);
}

TEST_CASE("training settings are validated") {
  Data d;
  TrainConfig c = quick(1);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_THROWS_AS(train(d.pairs, d.worlds, d.model, quick(1), HeuristicConfig::tiny(FeatureMode::relaxed_fk, 6, 8)),
                  InvalidArgument);
  const TrainConfig back = train_config_from_json(train_config_to_json(quick(7)));
  CHECK(back.epochs == 7);
  CHECK(back.learning_rate == 3e-3);
}
