#include "simpnet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"

namespace simpnet {

namespace fs = std::filesystem;
using nlohmann::json;

json planner_params_to_json(const PlannerParams& p) {
  return {{"max_iterations", p.max_iterations},
          {"step_size", p.step_size},
          {"goal_bias", p.goal_bias},
          {"time_budget", p.time_budget},
          {"gamma", p.gamma},
          {"neural_steps", p.neural_steps},
          {"replanning_attempts", p.replanning_attempts},
          {"neural_dropout", p.neural_dropout},
          {"seed", p.seed},
          {"motion_step", p.motion.step}};
}

PlannerParams planner_params_from_json(const json& j, PlannerParams p) {
  try {
    p.max_iterations = j.value("max_iterations", p.max_iterations);
    p.step_size = j.value("step_size", p.step_size);
    p.goal_bias = j.value("goal_bias", p.goal_bias);
    p.time_budget = j.value("time_budget", p.time_budget);
    p.gamma = j.value("gamma", p.gamma);
    p.neural_steps = j.value("neural_steps", p.neural_steps);
    p.replanning_attempts = j.value("replanning_attempts", p.replanning_attempts);
    p.neural_dropout = j.value("neural_dropout", p.neural_dropout);
    p.seed = j.value("seed", p.seed);
    p.motion.step = j.value("motion_step", p.motion.step);
  } catch (const json::exception& e) {
    throw FormatError(std::string("planner parameters: ") + e.what());
  }
  p.validate();
  return p;
}

BenchSpec BenchSpec::defaults() {
  BenchSpec s;
  s.classical.max_iterations = 1000000;
  return s;
}

void BenchSpec::validate() const {
  if (suites.empty()) throw InvalidArgument("bench: no suites");
  if (planners.empty()) throw InvalidArgument("bench: no planners");
  if (queries_per_world == 0) throw InvalidArgument("bench: queries_per_world must be at least 1");
  if (!(fixed_budget > 0.0)) throw InvalidArgument("bench: fixed_budget must be positive");
  if (neural.time_budget != 0.0) throw InvalidArgument("bench: neural planners take no wall-clock budget");
  classical.validate();
  neural.validate();
  for (const BenchSuite& s : suites)
    if (s.worlds.empty()) throw InvalidArgument("bench: suite '" + s.name + "' has no worlds");
  for (std::size_t i = 0; i < planners.size(); ++i) {
    if (planners[i].label.empty() || planners[i].label.find(',') != std::string::npos)
      throw InvalidArgument("bench: planner labels must be nonempty and comma-free");
    for (std::size_t j = 0; j < i; ++j)
      if (planners[j].label == planners[i].label)
        throw InvalidArgument("bench: duplicate planner label '" + planners[i].label + "'");
  }
}

namespace {

template <class F>
void parallel_for(std::size_t n, std::size_t workers, F f) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w)
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Prepared {
  BenchSpec spec;
  // queries[suite][world][k]
  std::vector<std::vector<std::vector<Query>>> queries;
  std::vector<std::optional<HeuristicWeights>> weights;
};

bool is_neural(const BenchPlanner& p) { return p.kind == PlannerKind::simpnet; }

void run_one(const Prepared& prep, const KinematicModel& model, QueryRun& run, bool replay) {
  const BenchPlanner& planner = prep.spec.planners[run.planner];
  const Workspace& ws = prep.spec.suites[run.suite].worlds[run.world];
  const Query& q = prep.queries[run.suite][run.world][run.query];
  PlannerParams params = is_neural(planner) ? prep.spec.neural : prep.spec.classical;
  params.seed = run.seed;
  if (replay && !is_neural(planner)) {
    params.time_budget = 0.0;
    params.max_iterations = run.iteration_cap;
  }
  const HeuristicWeights* w = prep.weights[run.planner] ? &*prep.weights[run.planner] : nullptr;
  PlanResult r;
  try {
    r = plan(planner.kind, ws, model, q.start, q.goal, params, w);
  } catch (const InvalidQuery&) {
    r = PlanResult{};
  }
  run.success = r.success;
  run.cost = r.success ? r.cost : 0.0;
  run.iterations = r.iterations_used;
  run.wall_time = r.wall_time;
  if (!replay && !is_neural(planner)) run.iteration_cap = r.iterations_used;
}

BenchRow summarize(const Prepared& prep, const std::vector<QueryRun>& runs, std::size_t p, std::size_t s,
                   double budget) {
  BenchRow row;
  row.planner = prep.spec.planners[p].label;
  row.suite = prep.spec.suites[s].name;
  row.budget = budget;
  double cost = 0.0, iterations = 0.0, time = 0.0;
  for (const QueryRun& r : runs) {
    if (r.planner != p || r.suite != s) continue;
    ++row.queries;
    iterations += static_cast<double>(r.iterations);
    time += r.wall_time;
    if (r.success) {
      ++row.successes;
      cost += r.cost;
    }
  }
  row.mean_cost = row.successes > 0 ? cost / static_cast<double>(row.successes) : std::nan("");
  row.mean_iterations = row.queries > 0 ? iterations / static_cast<double>(row.queries) : 0.0;
  row.mean_time = row.queries > 0 ? time / static_cast<double>(row.queries) : 0.0;
  return row;
}

std::size_t worker_count(const BenchSpec& spec) {
  return spec.workers > 0 ? spec.workers : std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs every (planner, query) of one suite for the given planner indices.
void run_group(const Prepared& prep, const KinematicModel& model, std::vector<QueryRun>& runs,
               const std::vector<std::size_t>& indices, bool replay, const BenchProgress& progress) {
  parallel_for(indices.size(), worker_count(prep.spec), [&](std::size_t i) {
    run_one(prep, model, runs[indices[i]], replay);
  });
  if (progress && !indices.empty()) {
    const QueryRun& r = runs[indices.front()];
    progress(prep.spec.planners[r.planner].label, prep.spec.suites[r.suite].name, indices.size(), indices.size());
  }
}

BenchReport assemble(const Prepared& prep, std::vector<QueryRun> runs, std::vector<double> budgets) {
  BenchReport report;
  for (std::size_t p = 0; p < prep.spec.planners.size(); ++p)
    for (std::size_t s = 0; s < prep.spec.suites.size(); ++s)
      report.rows.push_back(summarize(prep, runs, p, s, budgets[s]));
  report.runs = std::move(runs);
  report.budgets = std::move(budgets);
  return report;
}

std::vector<QueryRun> plan_runs(const Prepared& prep) {
  std::vector<QueryRun> runs;
  const BenchSpec& spec = prep.spec;
  for (std::size_t s = 0; s < spec.suites.size(); ++s)
    for (std::size_t p = 0; p < spec.planners.size(); ++p)
      for (std::size_t w = 0; w < spec.suites[s].worlds.size(); ++w)
        for (std::size_t q = 0; q < spec.queries_per_world; ++q) {
          QueryRun r;
          r.suite = s;
          r.world = w;
          r.query = q;
          r.planner = p;
          r.seed = Rng::derive(spec.seed, {s, w, q, p});
          runs.push_back(r);
        }
  return runs;
}

std::vector<std::size_t> select(const std::vector<QueryRun>& runs, std::size_t suite, std::size_t planner) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (runs[i].suite == suite && runs[i].planner == planner) out.push_back(i);
  return out;
}

std::string fmt(const char* pattern, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void write_outputs(const BenchReport& report, const fs::path& out_dir) {
  write_text_atomic(out_dir / "bench.csv", bench_csv(report));
  write_text_atomic(out_dir / "timing.csv", timing_csv(report));
  write_text_atomic(out_dir / "report.md", render_report(report.rows));
}

json runs_to_json(const BenchReport& report) {
  json runs = json::array();
  for (const QueryRun& r : report.runs)
    runs.push_back({{"suite", r.suite},
                    {"world", r.world},
                    {"query", r.query},
                    {"planner", r.planner},
                    {"seed", r.seed},
                    {"iteration_cap", r.iteration_cap},
                    {"success", r.success},
                    {"cost", r.cost},
                    {"iterations", r.iterations},
                    {"wall_time", r.wall_time}});
  return {{"format", "simpnet-bench-runs"}, {"version", 1}, {"budgets", report.budgets}, {"runs", runs}};
}

void write_bundle(const Prepared& prep, const KinematicModel& model, const BenchReport& report,
                  const fs::path& dir) {
  const BenchSpec& spec = prep.spec;
  json planners = json::array(), suites = json::array(), queries = json::array();
  for (std::size_t p = 0; p < spec.planners.size(); ++p) {
    const BenchPlanner& bp = spec.planners[p];
    json entry = {{"label", bp.label}, {"planner", planner_name(bp.kind)}, {"weights", nullptr}};
    if (prep.weights[p]) {
      const std::string rel = "weights/" + bp.label + ".json";
      prep.weights[p]->save(dir / rel);
      entry["weights"] = rel;
    }
    planners.push_back(entry);
  }
  for (std::size_t s = 0; s < spec.suites.size(); ++s) {
    const BenchSuite& suite = spec.suites[s];
    json ids = json::array(), worlds = json::array();
    for (std::size_t w = 0; w < suite.worlds.size(); ++w) {
      const Workspace& ws = suite.worlds[w];
      save_workspace(dir / "worlds" / suite.name / (ws.id() + ".json"), ws);
      ids.push_back(ws.id());
      json qs = json::array();
      for (const Query& q : prep.queries[s][w])
        qs.push_back({{"start", joint_vector_to_json(q.start)}, {"goal", joint_vector_to_json(q.goal)}});
      worlds.push_back({{"id", ws.id()}, {"queries", qs}});
    }
    suites.push_back({{"name", suite.name}, {"worlds", ids}});
    queries.push_back({{"name", suite.name}, {"worlds", worlds}});
  }
  write_json_atomic(dir / "spec.json", {{"format", "simpnet-bench-spec"},
                                        {"version", 1},
                                        {"seed", spec.seed},
                                        {"queries_per_world", spec.queries_per_world},
                                        {"fixed_budget", spec.fixed_budget},
                                        {"workers", spec.workers},
                                        {"classical", planner_params_to_json(spec.classical)},
                                        {"neural", planner_params_to_json(spec.neural)},
                                        {"planners", planners},
                                        {"suites", suites}});
  write_json_atomic(dir / "robot.json", robot_to_json(model));
  write_json_atomic(dir / "queries.json", {{"format", "simpnet-bench-queries"}, {"version", 1}, {"suites", queries}});
  write_json_atomic(dir / "runs.json", runs_to_json(report));
}

}  // namespace

BenchReport run_bench(const BenchSpec& spec, const KinematicModel& model, const fs::path& out_dir,
                      const BenchProgress& progress) {
  spec.validate();
  Prepared prep{spec, {}, {}};
  for (const BenchPlanner& p : spec.planners) {
    if (is_neural(p)) {
      if (p.weights.empty()) throw InvalidArgument("bench: planner '" + p.label + "' needs a weight file");
      prep.weights.emplace_back(HeuristicWeights::load(p.weights));
    } else {
      prep.weights.emplace_back(std::nullopt);
    }
  }
  for (std::size_t s = 0; s < spec.suites.size(); ++s) {
    auto& per_world = prep.queries.emplace_back();
    for (std::size_t w = 0; w < spec.suites[s].worlds.size(); ++w)
      per_world.push_back(
          generate_queries(spec.suites[s].worlds[w], model, spec.queries_per_world, Rng::derive(spec.seed, {s, w})));
  }

  std::vector<QueryRun> runs = plan_runs(prep);
  std::vector<double> budgets(spec.suites.size(), spec.fixed_budget);
  for (std::size_t s = 0; s < spec.suites.size(); ++s) {
    std::optional<std::size_t> budget_source;
    for (std::size_t p = 0; p < spec.planners.size(); ++p) {
      if (!is_neural(spec.planners[p])) continue;
      const auto idx = select(runs, s, p);
      run_group(prep, model, runs, idx, false, progress);
      if (!budget_source) {
        budget_source = p;
        double total = 0.0;
        for (std::size_t i : idx) total += runs[i].wall_time;
        budgets[s] = total / static_cast<double>(idx.size());
      }
    }
    prep.spec.classical.time_budget = budgets[s];
    for (std::size_t p = 0; p < spec.planners.size(); ++p)
      if (!is_neural(spec.planners[p])) run_group(prep, model, runs, select(runs, s, p), false, progress);
  }
  prep.spec.classical.time_budget = 0.0;

  BenchReport report = assemble(prep, std::move(runs), std::move(budgets));
  write_outputs(report, out_dir);
  write_bundle(prep, model, report, out_dir / "bundle");
  return report;
}

BenchReport replay_bench(const fs::path& dir, const fs::path& out_dir, const BenchProgress& progress) {
  const fs::path bundle_dir = fs::exists(dir / "spec.json") ? dir : dir / "bundle";
  const json spec_json = read_json_file(bundle_dir / "spec.json");
  expect_document(spec_json, "simpnet-bench-spec", 1);
  const KinematicModel model = load_robot(bundle_dir / "robot.json");
  const json queries_json = read_json_file(bundle_dir / "queries.json");
  expect_document(queries_json, "simpnet-bench-queries", 1);
  const json runs_json = read_json_file(bundle_dir / "runs.json");
  expect_document(runs_json, "simpnet-bench-runs", 1);

  Prepared prep;
  std::vector<QueryRun> runs;
  std::vector<double> budgets;
  try {
    BenchSpec& spec = prep.spec;
    spec.seed = spec_json.at("seed").get<std::uint64_t>();
    spec.queries_per_world = spec_json.at("queries_per_world").get<std::size_t>();
    spec.fixed_budget = spec_json.at("fixed_budget").get<double>();
    spec.workers = spec_json.value("workers", std::size_t{0});
    spec.classical = planner_params_from_json(spec_json.at("classical"));
    spec.neural = planner_params_from_json(spec_json.at("neural"));
    for (const json& p : spec_json.at("planners")) {
      BenchPlanner bp{p.at("label").get<std::string>(), parse_planner(p.at("planner").get<std::string>()), {}};
      if (!p.at("weights").is_null()) {
        bp.weights = bundle_dir / p.at("weights").get<std::string>();
        prep.weights.emplace_back(HeuristicWeights::load(bp.weights));
      } else {
        prep.weights.emplace_back(std::nullopt);
      }
      spec.planners.push_back(bp);
    }
    const json& qsuites = queries_json.at("suites");
    for (std::size_t s = 0; s < spec_json.at("suites").size(); ++s) {
      const json& js = spec_json.at("suites")[s];
      BenchSuite suite{js.at("name").get<std::string>(), {}};
      auto& per_world = prep.queries.emplace_back();
      for (std::size_t w = 0; w < js.at("worlds").size(); ++w) {
        const std::string id = js.at("worlds")[w].get<std::string>();
        suite.worlds.push_back(load_workspace(bundle_dir / "worlds" / suite.name / (id + ".json")));
        const json& jw = qsuites.at(s).at("worlds").at(w);
        if (jw.at("id").get<std::string>() != id) throw FormatError("bench bundle: query file out of order");
        std::vector<Query> qs;
        for (const json& q : jw.at("queries"))
          qs.push_back({joint_vector_from_json(q.at("start")), joint_vector_from_json(q.at("goal"))});
        per_world.push_back(std::move(qs));
      }
      spec.suites.push_back(std::move(suite));
    }
    budgets = runs_json.at("budgets").get<std::vector<double>>();
    for (const json& r : runs_json.at("runs")) {
      QueryRun run;
      run.suite = r.at("suite").get<std::size_t>();
      run.world = r.at("world").get<std::size_t>();
      run.query = r.at("query").get<std::size_t>();
      run.planner = r.at("planner").get<std::size_t>();
      run.seed = r.at("seed").get<std::uint64_t>();
      run.iteration_cap = r.at("iteration_cap").get<std::size_t>();
      if (run.suite >= spec.suites.size() || run.planner >= spec.planners.size() ||
          run.world >= spec.suites[run.suite].worlds.size() ||
          run.query >= prep.queries[run.suite][run.world].size())
        throw FormatError("bench bundle: run refers to a missing suite, world, query or planner");
      runs.push_back(run);
    }
    if (budgets.size() != spec.suites.size()) throw FormatError("bench bundle: one budget per suite expected");
  } catch (const json::exception& e) {
    throw FormatError(std::string("bench bundle: ") + e.what());
  }
  prep.spec.validate();

  for (std::size_t s = 0; s < prep.spec.suites.size(); ++s)
    for (std::size_t p = 0; p < prep.spec.planners.size(); ++p)
      run_group(prep, model, runs, select(runs, s, p), true, progress);
  BenchReport report = assemble(prep, std::move(runs), std::move(budgets));
  write_outputs(report, out_dir);
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "# schema: " << kBenchCsvSchema << "\n";
  out << "planner,suite,queries,successes,success_pct,mean_cost,mean_iterations,budget_s\n";
  for (const BenchRow& r : report.rows)
    out << r.planner << ',' << r.suite << ',' << r.queries << ',' << r.successes << ','
        << fmt("%.2f", r.success_pct()) << ',' << fmt("%.6f", r.mean_cost) << ',' << fmt("%.3f", r.mean_iterations)
        << ',' << fmt("%.6f", r.budget) << '\n';
  return out.str();
}

std::string timing_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "# schema: " << kTimingCsvSchema << "\n";
  out << "planner,suite,mean_time_s\n";
  for (const BenchRow& r : report.rows) out << r.planner << ',' << r.suite << ',' << fmt("%.6f", r.mean_time) << '\n';
  return out.str();
}

std::string render_report(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "# Benchmark\n\n";
  out << "| Planner | Suite | T [s] | C | Success [%] | Queries | Classical budget [s] |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const BenchRow& r : rows)
    out << "| " << r.planner << " | " << r.suite << " | " << fmt("%.3f", r.mean_time) << " | "
        << (std::isnan(r.mean_cost) ? std::string("-") : fmt("%.2f", r.mean_cost)) << " | "
        << fmt("%.1f", r.success_pct()) << " | " << r.queries << " | " << fmt("%.3f", r.budget) << " |\n";
  out << "\nT is the mean planning time per query, C the mean path cost (sum of joint-space\n"
         "distances between waypoints) over successful queries.\n\n";
  out << "Reference values (UR5e with a MoveIt!/FCL stack on other hardware;\n"
         "not expected to match desk-scale runs):\n\n";
  out << "- SIMPNet, simple seen: T = 0.5 s, success 94%\n";
  out << "- SIMPNet, complex seen: success 81%\n";
  out << "- Simple seen cost: Informed-RRT* C = 5.37, Bi-RRT C = 8.81\n";
  return out.str();
}

std::vector<BenchRow> load_bench_rows(const fs::path& bench_dir) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto number = [](const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); };
  std::vector<BenchRow> rows;
  {
    std::istringstream in(read_text_file(bench_dir / "bench.csv"));
    std::string line;
    if (!std::getline(in, line) || line != std::string("# schema: ") + kBenchCsvSchema)
      throw FormatError("'" + (bench_dir / "bench.csv").string() + "' is not a " + kBenchCsvSchema + " file");
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split(line);
      if (c.size() != 8) throw FormatError("bench.csv: malformed row '" + line + "'");
      try {
        BenchRow r;
        r.planner = c[0];
        r.suite = c[1];
        r.queries = std::stoul(c[2]);
        r.successes = std::stoul(c[3]);
        r.mean_cost = number(c[5]);
        r.mean_iterations = number(c[6]);
        r.budget = number(c[7]);
        rows.push_back(r);
      } catch (const std::logic_error&) {
        throw FormatError("bench.csv: malformed row '" + line + "'");
      }
    }
  }
  if (fs::exists(bench_dir / "timing.csv")) {
    std::istringstream in(read_text_file(bench_dir / "timing.csv"));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto c = split(line);
      if (c.size() != 3) continue;
      for (BenchRow& r : rows)
        if (r.planner == c[0] && r.suite == c[1]) r.mean_time = number(c[2]);
    }
  }
  return rows;
}

}  // namespace simpnet
