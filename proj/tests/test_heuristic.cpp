#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "simpnet/error.hpp"
#include "simpnet/heuristic.hpp"

using namespace simpnet;
using nn::Tensor;

namespace {

JointVector random_q(Rng& r) {
  JointVector q;
  for (double& x : q) x = r.uniform(-std::numbers::pi, std::numbers::pi);
  return q;
}

Workspace one_box_world(std::size_t capacity) {
  return Workspace("w", Profile::simple, Workspace::default_bounds(),
                   {BoxObstacle{{0.4, 0.3, 0.2}, {0.2, 0.2, 0.4}}}, capacity);
}

}  // namespace

TEST_CASE("chain graph") {
  const ManipulatorGraph g = build_graph(KinematicModel::ur5e());
  CHECK(g.node_count == 6);
  CHECK(g.edges.size() == 5);
  CHECK(g.neighbors[0] == std::vector<std::size_t>{1});
  CHECK(g.neighbors[3] == std::vector<std::size_t>{2, 4});
  CHECK(g.neighbors[5] == std::vector<std::size_t>{4});
}

TEST_CASE("node features by hand") {
  JointVector qt{}, qg{};
  qt[0] = std::numbers::pi / 2;
  qg[0] = -std::numbers::pi / 4;
  std::array<Point3, kNumJoints> xt{}, xg{};
  xt[0] = {0.75, 0, 0};
  xg[0] = {0, 0.75, 0};
  const Aabb bounds = Workspace::default_bounds();
  const NodeFeatureMatrix f = node_features(FeatureMode::full, qt, qg, xt, xg, bounds);
  REQUIRE(f.width == 13);
  const auto r = f.row(0);
  CHECK(r[0] == doctest::Approx(0.5));
  CHECK(r[4] == doctest::Approx(0.5));
  CHECK(r[6] == doctest::Approx(0.5));
  CHECK(r[7] == doctest::Approx(0.5));
  CHECK(r[9] == doctest::Approx(std::sqrt(0.5)));
  CHECK(r[10] == doctest::Approx(0.5));
  CHECK(r[11] == doctest::Approx(-0.25));
  CHECK(r[12] == doctest::Approx(0.75));
  const NodeFeatureMatrix rel = node_features(FeatureMode::relaxed_fk, qt, qg, xt, xg, bounds);
  REQUIRE(rel.width == 3);
  CHECK(rel.row(0)[0] == doctest::Approx(0.5));
  CHECK(rel.row(0)[2] == doctest::Approx(0.75));
}

TEST_CASE("default stack widths") {
  const HeuristicConfig c = HeuristicConfig::defaults(FeatureMode::full, 6);
  CHECK(c.mlp_i.widths == std::vector<std::size_t>{78, 256, 192});
  CHECK(c.mlp_ii.widths == std::vector<std::size_t>{36, 256, 192});
  CHECK(c.query.widths == std::vector<std::size_t>{32, 64});
  CHECK(c.value.widths == std::vector<std::size_t>{32, 32});
  CHECK(c.edge.widths == std::vector<std::size_t>{64, 64, 32});
  CHECK(c.head.widths == std::vector<std::size_t>{32, 32, 1});
  CHECK(HeuristicConfig::defaults(FeatureMode::relaxed_fk, 10).mlp_i.widths.front() == 18);
  HeuristicConfig bad = c;
  bad.edge.widths = {60, 64, 32};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  const HeuristicConfig back = heuristic_config_from_json(heuristic_config_to_json(c));
  CHECK(back.mlp_ii.widths == c.mlp_ii.widths);
  CHECK(back.dropout == c.dropout);
}

TEST_CASE("message passing matches a per-node loop") {
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 2, 8), 3);
  const ManipulatorGraph g = build_graph(KinematicModel::ur5e());
  Rng r(51);
  std::vector<double> h(2 * 6 * 8);
  for (double& x : h) x = r.normal();
  const Tensor nodes({12, 8}, h);
  const Tensor out = message_pass(w, g, nodes, {});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 6; ++i) {
      const std::size_t row = b * 6 + i;
      std::vector<double> agg(8, 0.0);
      for (std::size_t j : g.neighbors[i]) {
        std::vector<double> pair(h.begin() + row * 8, h.begin() + row * 8 + 8);
        pair.insert(pair.end(), h.begin() + (b * 6 + j) * 8, h.begin() + (b * 6 + j) * 8 + 8);
        const Tensor m = w.edge.forward(Tensor({1, 16}, pair));
        for (std::size_t k = 0; k < 8; ++k) agg[k] += m.values()[k];
      }
      std::vector<double> in(h.begin() + row * 8, h.begin() + row * 8 + 8);
      in.insert(in.end(), agg.begin(), agg.end());
      const Tensor ref = w.node.forward(Tensor({1, 16}, in));
      for (std::size_t k = 0; k < 8; ++k) CHECK(out.at(row, k) == doctest::Approx(ref.values()[k]).epsilon(1e-12));
    }
}

TEST_CASE("end-to-end gradient of the width-8 heuristic") {
  const KinematicModel m = KinematicModel::ur5e();
  HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 2, 8), 4);
  const ManipulatorGraph g = build_graph(m);
  const Workspace ws = one_box_world(2);
  Rng r(52);
  std::vector<double> feats;
  for (int b = 0; b < 2; ++b) {
    const auto row = feature_row(w.config(), m, ws.bounds(), random_q(r), random_q(r));
    feats.insert(feats.end(), row.begin(), row.end());
  }
  const Tensor f({2, feats.size() / 2}, feats);
  const auto ov = obstacle_vector(ws);
  std::vector<double> obs(ov.begin(), ov.end());
  obs.insert(obs.end(), ov.begin(), ov.end());
  const Tensor o({2, ov.size()}, obs);
  const Tensor target({2, 6}, std::vector<double>(12, 0.1));
  auto loss = [&] { return nn::mse_loss(heuristic_forward(w, g, f, o, {}), target); };
  auto params = w.parameters();
  nn::zero_grad(params);
  nn::backward(loss());
  double worst = 0.0;
  std::size_t checked = 0;
  for (nn::Parameter* p : params) {
    const std::size_t stride = std::max<std::size_t>(1, p->value.size() / 7);
    for (std::size_t i = 0; i < p->value.size(); i += stride) {
      double& x = p->value.mutable_values()[i];
      const double fd = oracle::central_difference([&] { return loss().item(); }, x, 1e-5);
      worst = std::max(worst, oracle::rel_err(p->value.grad()[i], fd, 1e-4));
      ++checked;
    }
  }
  CHECK(checked > 100);
  CHECK(worst < 1e-3);
}

TEST_CASE("sampler respects dropout mode and limits") {
  const KinematicModel m = KinematicModel::ur5e();
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 5);
  const Workspace ws = one_box_world(6);
  const HeuristicSampler s(w, ws, m);
  Rng r(53), a(7), b(7), c(8);
  const JointVector qt = random_q(r), qg = random_q(r);
  CHECK(s.next(qt, qg, a, nn::DropoutMode::off) == s.next(qt, qg, c, nn::DropoutMode::off));
  const JointVector x = s.next(qt, qg, a), y = s.next(qt, qg, b);
  CHECK(m.within_limits(x));
  (void)y;
  Rng a2(7), c2(8);
  CHECK(s.next(qt, qg, a2) != s.next(qt, qg, c2));
  CHECK(sample_next(qt, qg, ws, m, w, r, nn::DropoutMode::off) == s.next(qt, qg, a, nn::DropoutMode::off));
}

TEST_CASE("sampler output matches the batched forward pass") {
  const KinematicModel m = KinematicModel::ur5e();
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::relaxed_fk, 6, 8), 6);
  const Workspace ws = one_box_world(6);
  Rng r(54);
  const JointVector qt = random_q(r), qg = random_q(r);
  const HeuristicSampler s(w, ws, m);
  const JointVector q = s.next(qt, qg, r, nn::DropoutMode::off);
  const auto row = feature_row(w.config(), m, ws.bounds(), qt, qg);
  const auto ov = obstacle_vector(ws);
  const Tensor out = heuristic_forward(w, build_graph(m), Tensor({1, row.size()}, row),
                                       Tensor({1, ov.size()}, std::vector<double>(ov.begin(), ov.end())), {});
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(q[j] == doctest::Approx(std::clamp(out.values()[j] * std::numbers::pi, -std::numbers::pi,
                                             std::numbers::pi))
                      .epsilon(1e-12));
}

TEST_CASE("sampler rejects a workspace of the wrong capacity") {
  const KinematicModel m = KinematicModel::ur5e();
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 5);
  const Workspace ws = one_box_world(10);
  CHECK_THROWS_AS(HeuristicSampler(w, ws, m), InvalidArgument);
}

TEST_CASE("weights round trip through a file") {
  const KinematicModel m = KinematicModel::ur5e();
  const HeuristicWeights w(HeuristicConfig::tiny(FeatureMode::full, 6, 8), 9);
  const auto path = std::filesystem::temp_directory_path() / "simpnet_weights_rt.json";
  w.save(path);
  const HeuristicWeights back = HeuristicWeights::load(path);
  std::filesystem::remove(path);
  CHECK(back.config().hidden == 8);
  const Workspace ws = one_box_world(6);
  Rng r(55);
  const JointVector qt = random_q(r), qg = random_q(r);
  Rng a(1), b(1);
  CHECK(HeuristicSampler(w, ws, m).next(qt, qg, a) == HeuristicSampler(back, ws, m).next(qt, qg, b));
  const HeuristicWeights copy = w.clone();
  Rng c(1), d(1);
  CHECK(HeuristicSampler(w, ws, m).next(qt, qg, c) == HeuristicSampler(copy, ws, m).next(qt, qg, d));
}
