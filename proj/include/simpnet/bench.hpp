#pragma once

// Multi-planner benchmark. Within a suite the neural planners run first and
// the first of them fixes the classical planners' time budget to its mean
// planning time. Every input is written to a bundle directory so the run can
// be replayed: time-limited runs record the iterations they reached and the
// replay caps iterations instead of wall-clock time.
//
// Seed splitting: the queries of world w in suite s come from
// generate_queries(..., Rng::derive(seed, {s, w})); the planner with index p
// in BenchSpec::planners plans query q with seed Rng::derive(seed, {s, w, q, p}).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "simpnet/dataset.hpp"
#include "simpnet/planners.hpp"

namespace simpnet {

inline constexpr const char* kBenchCsvSchema = "simpnet-bench-v1";
inline constexpr const char* kTimingCsvSchema = "simpnet-timing-v1";

struct BenchPlanner {
  std::string label;
  PlannerKind kind = PlannerKind::birrt;
  /// Weight file; required for simpnet, ignored otherwise.
  std::filesystem::path weights;
};

struct BenchSuite {
  std::string name;
  std::vector<Workspace> worlds;
};

struct BenchSpec {
  std::vector<BenchSuite> suites;
  std::vector<BenchPlanner> planners;
  std::size_t queries_per_world = 20;
  std::uint64_t seed = 0;
  /// Classical planners: time_budget is overwritten per suite, max_iterations is a safety cap.
  PlannerParams classical;
  /// Neural planners: no wall-clock budget (steps x replanning_attempts bounds them).
  PlannerParams neural;
  /// Classical budget in seconds when no neural planner is benchmarked.
  double fixed_budget = 1.0;
  /// 0 picks the hardware concurrency.
  std::size_t workers = 0;

  static BenchSpec defaults();
  void validate() const;
};

struct QueryRun {
  std::size_t suite = 0;
  std::size_t world = 0;
  std::size_t query = 0;
  std::size_t planner = 0;
  std::uint64_t seed = 0;
  /// Iteration cap used on replay; 0 means uncapped.
  std::size_t iteration_cap = 0;
  bool success = false;
  double cost = 0.0;
  std::size_t iterations = 0;
  double wall_time = 0.0;
};

struct BenchRow {
  std::string planner;
  std::string suite;
  std::size_t queries = 0;
  std::size_t successes = 0;
  double mean_cost = 0.0;  // over successes; NaN when there are none
  double mean_iterations = 0.0;
  double mean_time = 0.0;
  double budget = 0.0;  // classical time budget of the suite

  double success_pct() const { return queries == 0 ? 0.0 : 100.0 * successes / queries; }
};

struct BenchReport {
  std::vector<BenchRow> rows;  // planner-major, suites in spec order
  std::vector<QueryRun> runs;
  std::vector<double> budgets;  // per suite
};

using BenchProgress = std::function<void(const std::string& planner, const std::string& suite, std::size_t done,
                                         std::size_t total)>;

/// Runs the benchmark and writes bench.csv, timing.csv, report.md and
/// bundle/ under out_dir.
BenchReport run_bench(const BenchSpec& spec, const KinematicModel& model, const std::filesystem::path& out_dir,
                      const BenchProgress& progress = {});

/// Re-runs a bundle written by run_bench and writes bench.csv, timing.csv
/// and report.md under out_dir. dir is the bundle or the bench directory
/// holding it.
BenchReport replay_bench(const std::filesystem::path& dir, const std::filesystem::path& out_dir,
                         const BenchProgress& progress = {});

std::string bench_csv(const BenchReport& report);
std::string timing_csv(const BenchReport& report);

/// Markdown tables of T, C and success per planner and suite, with a
/// footer of published reference values.
std::string render_report(const std::vector<BenchRow>& rows);

/// Rows back from bench.csv (and timing.csv when present) in a bench directory.
std::vector<BenchRow> load_bench_rows(const std::filesystem::path& bench_dir);

nlohmann::json planner_params_to_json(const PlannerParams& p);
PlannerParams planner_params_from_json(const nlohmann::json& j, PlannerParams base = {});

}  // namespace simpnet
