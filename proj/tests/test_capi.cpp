#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "simpnet/simpnet.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  simp_string_free(s);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("status names and argument checks") {
  CHECK(std::string(simp_version()).size() > 0);
  CHECK(std::string(simp_status_name(SIMP_ERR_INVALID_QUERY)) == "invalid query");
  simp_robot* r = nullptr;
  CHECK(simp_robot_load(nullptr, &r) == SIMP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(simp_last_error()).size() > 0);
  CHECK(simp_robot_load("/nonexistent/robot.json", &r) == SIMP_ERR_IO);
  simp_planner k;
  CHECK(simp_planner_parse("rrt_star", &k) == SIMP_OK);
  CHECK(k == SIMP_PLANNER_RRT_STAR);
  CHECK(simp_planner_parse("nope", &k) == SIMP_ERR_INVALID_ARGUMENT);
  double cost = 0;
  const double wp[12] = {0, 0, 0, 0, 0, 0, 3, 4, 0, 0, 0, 0};
  CHECK(simp_path_cost(wp, 2, &cost) == SIMP_OK);
  CHECK(cost == doctest::Approx(5.0));
}

TEST_CASE("robot, world and planning through the C interface") {
  simp_robot* robot = nullptr;
  REQUIRE(simp_robot_default(&robot) == SIMP_OK);
  double pos[21];
  const double zero[6] = {0, 0, 0, 0, 0, 0};
  REQUIRE(simp_robot_fk(robot, zero, pos) == SIMP_OK);
  CHECK(pos[5] == doctest::Approx(0.1625));

  simp_world* world = nullptr;
  REQUIRE(simp_world_generate(robot, "simple", 3, "c-00", &world) == SIMP_OK);
  size_t n = 0;
  CHECK(simp_world_obstacle_count(world, &n) == SIMP_OK);
  CHECK(n >= 3);
  const fs::path wf = fs::temp_directory_path() / "simpnet_capi_world.json";
  CHECK(simp_world_save(world, wf.c_str()) == SIMP_OK);
  simp_world* loaded = nullptr;
  REQUIRE(simp_world_load(wf.c_str(), &loaded) == SIMP_OK);

  double a[6], b[6];
  REQUIRE(simp_sample_free(loaded, robot, 1, a) == SIMP_OK);
  REQUIRE(simp_sample_free(loaded, robot, 2, b) == SIMP_OK);
  int hit = 1;
  CHECK(simp_world_in_collision(loaded, robot, a, &hit) == SIMP_OK);
  CHECK(hit == 0);
  double c = 0;
  CHECK(simp_world_clearance(loaded, robot, a, &c) == SIMP_OK);
  CHECK(c >= 0.0);

  simp_plan_result* res = nullptr;
  REQUIRE(simp_plan(loaded, robot, SIMP_PLANNER_BIRRT, a, b, nullptr, "{\"max_iterations\": 4000}", 7, &res) ==
          SIMP_OK);
  REQUIRE(simp_plan_result_success(res) == 1);
  const size_t count = simp_plan_result_waypoint_count(res);
  double q[6];
  CHECK(simp_plan_result_waypoint(res, count - 1, q) == SIMP_OK);
  for (int i = 0; i < 6; ++i) CHECK(q[i] == b[i]);
  CHECK(simp_plan_result_waypoint(res, count, q) == SIMP_ERR_INVALID_ARGUMENT);
  CHECK(simp_plan_result_cost(res) > 0.0);
  simp_plan_result_free(res);

  CHECK(simp_plan(loaded, robot, SIMP_PLANNER_SIMPNET, a, b, nullptr, nullptr, 7, &res) ==
        SIMP_ERR_INVALID_ARGUMENT);
  CHECK(simp_plan(loaded, robot, SIMP_PLANNER_BIRRT, a, b, nullptr, "{not json", 7, &res) ==
        SIMP_ERR_INVALID_ARGUMENT);

  simp_weights* w = nullptr;
  REQUIRE(simp_weights_init("full", 6, 4, &w) == SIMP_OK);
  REQUIRE(simp_plan(loaded, robot, SIMP_PLANNER_SIMPNET, a, b, w, nullptr, 7, &res) == SIMP_OK);
  simp_plan_result_free(res);
  simp_weights_free(w);

  simp_world* empty = nullptr;
  REQUIRE(simp_world_empty("complex", &empty) == SIMP_OK);
  int valid = 0;
  CHECK(simp_motion_valid(empty, robot, a, b, &valid) == SIMP_OK);
  CHECK(valid == 1);
  simp_world_free(empty);

  simp_world_free(loaded);
  simp_world_free(world);
  simp_robot_free(robot);
  fs::remove(wf);
}

TEST_CASE("colliding query is reported as such") {
  simp_robot* robot = nullptr;
  REQUIRE(simp_robot_default(&robot) == SIMP_OK);
  const fs::path wf = fs::temp_directory_path() / "simpnet_capi_block.json";
  {
    std::ofstream out(wf);
    out << R"({"format": "simpnet-workspace", "version": 1, "id": "block", "profile": "simple",
               "bounds": {"lo": [-1.5, -1.5, -1.5], "hi": [1.5, 1.5, 1.5]},
               "obstacles": [{"center": [-0.6, 0.0, 0.16], "dims": [0.1, 0.1, 0.1]}]})";
  }
  simp_world* world = nullptr;
  REQUIRE(simp_world_load(wf.c_str(), &world) == SIMP_OK);
  const double zero[6] = {0, 0, 0, 0, 0, 0};
  const double free[6] = {1.5, 0, 0, 0, 0, 0};
  simp_plan_result* res = nullptr;
  CHECK(simp_plan(world, robot, SIMP_PLANNER_RRT, zero, free, nullptr, nullptr, 1, &res) == SIMP_ERR_INVALID_QUERY);
  CHECK(res == nullptr);
  simp_world_free(world);
  simp_robot_free(robot);
  fs::remove(wf);
}

TEST_CASE("data pipeline through the C interface") {
  const fs::path root = fs::temp_directory_path() / "simpnet_capi_pipeline";
  fs::remove_all(root);
  simp_robot* robot = nullptr;
  REQUIRE(simp_robot_default(&robot) == SIMP_OK);
  char* s = nullptr;
  REQUIRE(simp_gen_worlds(robot, root.c_str(), "p", "simple", 2, 5, &s) == SIMP_OK);
  CHECK(take(s).find("p-01") != std::string::npos);
  REQUIRE(simp_collect(robot, root.c_str(), "p", 3, 5, R"({"oracle": {"max_iterations": 1500}, "workers": 1})",
                       &s) == SIMP_OK);
  CHECK(take(s).find("\"paths\": 6") != std::string::npos);
  CHECK(fs::exists(root / "pairs" / "p.json"));

  const fs::path wpath = root / "w.json";
  REQUIRE(simp_train(robot, root.c_str(), "p", R"({"epochs": 3, "batch_size": 16})",
                     R"({"preset": "tiny", "hidden": 8})", wpath.c_str(), nullptr, &s) == SIMP_OK);
  CHECK(take(s).find("val_loss") != std::string::npos);
  simp_weights* w = nullptr;
  REQUIRE(simp_weights_load(wpath.c_str(), &w) == SIMP_OK);
  simp_weights_free(w);

  const std::string spec = R"({"suites": ["p"], "queries_per_world": 2, "seed": 3, "workers": 1,
      "planners": [{"label": "net", "planner": "simpnet", "weights": ")" +
                           wpath.string() + R"("}, {"planner": "birrt"}]})";
  const fs::path out = root / "bench";
  REQUIRE(simp_bench(robot, root.c_str(), spec.c_str(), out.c_str(), &s) == SIMP_OK);
  take(s);
  REQUIRE(simp_bench_replay(out.c_str(), (root / "replay").c_str(), &s) == SIMP_OK);
  take(s);
  CHECK(slurp(out / "bench.csv") == slurp(root / "replay" / "bench.csv"));
  REQUIRE(simp_report(out.c_str(), &s) == SIMP_OK);
  CHECK(take(s).find("| birrt | p |") != std::string::npos);
  simp_robot_free(robot);
  fs::remove_all(root);
}
