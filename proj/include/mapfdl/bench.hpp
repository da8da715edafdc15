// Copyright 2026 The mapfdl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Benchmark harness: seeded instances, solver and random-policy runs, replay
// through the episode engine, summary statistics, heat maps, sweeps and the
// CSV / JSON / PGM writers.

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapfdl/conflicts.hpp"
#include "mapfdl/deadlock.hpp"
#include "mapfdl/episode.hpp"
#include "mapfdl/error.hpp"
#include "mapfdl/layouts.hpp"
#include "mapfdl/solvers.hpp"

namespace mapfdl {

inline constexpr std::uint64_t kDefaultBaseSeed = 42;

enum class Algorithm { kMaAstar, kCbs, kRandom };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kMaAstar:
      return "ma-astar";
    case Algorithm::kCbs:
      return "cbs";
    case Algorithm::kRandom:
      return "random";
  }
  return "?";
}

inline Algorithm algorithm_from_string(std::string_view s) {
  if (s == "ma-astar" || s == "maastar" || s == "mastar") return Algorithm::kMaAstar;
  if (s == "cbs") return Algorithm::kCbs;
  if (s == "random") return Algorithm::kRandom;
  if (s == "external") {
    throw ConfigError("external policies are evaluated by the client through `serve`, not by `bench`");
  }
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Layout resolution

struct ResolvedLayout {
  GridLayout grid;
  std::optional<TaskSet> default_tasks;
};

// `spec` is a reference-model id ("rm2.1", "rm2_1", ...) or a path to a layout
// text file. Bare names are also looked up as "<dir>/<name>.txt" in
// `layout_dir` when given.
inline ResolvedLayout resolve_layout(const std::string& spec, const std::string& variant = {},
                                     const VariantParams& params = {}, const std::filesystem::path& layout_dir = {}) {
  if (const auto family = parse_family(spec)) {
    BuiltLayout b = build_layout({*family, variant}, params);
    return {b.grid, b.default_tasks};
  }
  std::vector<std::filesystem::path> candidates{spec};
  if (!layout_dir.empty()) {
    candidates.push_back(layout_dir / spec);
    candidates.push_back(layout_dir / (spec + ".txt"));
  }
  for (const auto& path : candidates) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(path, ec)) {
      LoadedLayout l = load_layout_file(path);
      return {l.grid, l.default_tasks};
    }
  }
  throw ConfigError("unknown layout '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Records

enum class RunStatus { kSuccess, kTimeout, kInfeasible, kTruncated };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kSuccess:
      return "success";
    case RunStatus::kTimeout:
      return "timeout";
    case RunStatus::kInfeasible:
      return "infeasible";
    case RunStatus::kTruncated:
      return "truncated";
  }
  return "?";
}

inline RunStatus run_status_from_string(std::string_view s) {
  for (RunStatus r : {RunStatus::kSuccess, RunStatus::kTimeout, RunStatus::kInfeasible, RunStatus::kTruncated})
    if (to_string(r) == s) return r;
  throw DecodeError("unknown status '" + std::string(s) + "'");
}

struct RunRecord {
  int instance = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  RunStatus status = RunStatus::kTimeout;
  std::optional<int> timesteps;  // set iff success
  std::optional<int> sum_of_costs;
  double wall_ms = 0.0;
  int collisions = 0;
  bool deadlock = false;

  bool success() const { return status == RunStatus::kSuccess; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// ---------------------------------------------------------------------------
// Heat maps

struct HeatMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> counts;  // row-major
  int episodes = 0;                  // successful episodes aggregated

  HeatMap() = default;
  HeatMap(int r, int c) : rows(r), cols(c), counts(static_cast<std::size_t>(r * c), 0) {}

  std::int64_t at(int r, int c) const { return counts[static_cast<std::size_t>(r * cols + c)]; }
  std::int64_t total() const {
    std::int64_t sum = 0;
    for (auto v : counts) sum += v;
    return sum;
  }

  void merge(const HeatMap& other) {
    if (other.rows != rows || other.cols != cols) throw InputError("heat map dimensions differ");
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
    episodes += other.episodes;
  }

  friend bool operator==(const HeatMap&, const HeatMap&) = default;
};

// Each agent adds one visit to its cell at every t = 0..T_end of a terminated
// episode; truncated episodes are ignored.
inline void accumulate_heatmap(HeatMap& map, const GridLayout& grid, const Trace& trace) {
  if (map.rows != grid.rows() || map.cols != grid.cols()) throw InputError("trace layout does not match heat map");
  if (!trace.terminated()) return;
  auto add = [&](const std::vector<Position>& positions) {
    for (const Position& p : positions) {
      if (!grid.is_free(p)) throw InputError("trace visits a cell outside the layout");
      ++map.counts[static_cast<std::size_t>(grid.index(p))];
    }
  };
  add(trace.initial_positions);
  for (const TraceRecord& rec : trace.steps) add(rec.positions);
  ++map.episodes;
}

inline HeatMap accumulate_heatmap(const GridLayout& grid, const std::vector<Trace>& traces) {
  HeatMap map(grid.rows(), grid.cols());
  for (const Trace& t : traces) accumulate_heatmap(map, grid, t);
  return map;
}

// ---------------------------------------------------------------------------
// Replays and single runs

// Feeds the plans to the episode engine one joint step at a time; agents
// whose plan has ended stay put.
inline Trace replay_plans(const GridLayout& grid, const TaskSet& tasks, const std::vector<Path>& paths,
                          CollisionModel model, int t_max, DeadlockMonitor* monitor = nullptr,
                          bool* deadlock = nullptr) {
  EpisodeConfig cfg;
  cfg.grid = grid;
  cfg.tasks = tasks;
  cfg.t_max = t_max;
  cfg.collision = model;
  Episode ep(cfg);
  ep.reset(0);
  const int horizon = makespan(paths);
  for (int t = 0; t < horizon && !ep.state().finished(); ++t) {
    JointAction joint;
    std::vector<Position> intents;
    for (const Path& p : paths) {
      joint.push_back(action_between(position_at(p, t), position_at(p, t + 1)));
      intents.push_back(position_at(p, t + 1));
    }
    if (monitor && monitor->observe(grid, ep.state(), intents) && deadlock) *deadlock = true;
    ep.step(joint);
  }
  return ep.trace();
}

// Sum of per-agent arrival times along an episode trace.
inline int trace_sum_of_costs(const Trace& trace) {
  std::vector<Path> plans(trace.initial_positions.size());
  for (std::size_t i = 0; i < plans.size(); ++i) plans[i].push_back(trace.initial_positions[i]);
  for (const TraceRecord& rec : trace.steps)
    for (std::size_t i = 0; i < plans.size(); ++i) plans[i].push_back(rec.positions[i]);
  return sum_of_costs(plans);
}

struct RunOutput {
  RunRecord record;
  Trace trace;  // episode trace (replayed for solvers); empty steps if unsolved
};

struct RunSettings {
  SolverBudget budget;
  CollisionModel collision = CollisionModel::kStandard;
  int t_max = 100;
  bool action_mask = false;
  int deadlock_window = 3;
};

inline RunOutput run_instance(const GridLayout& grid, const TaskSet& tasks, Algorithm algo, int instance,
                              std::uint64_t seed, const RunSettings& settings) {
  RunOutput out;
  RunRecord& rec = out.record;
  rec.instance = instance;
  rec.seed = seed;
  rec.algorithm = to_string(algo);
  const int n = static_cast<int>(tasks.size());
  DeadlockMonitor monitor(settings.deadlock_window);

  if (algo == Algorithm::kRandom) {
    const auto started = std::chrono::steady_clock::now();
    EpisodeConfig cfg;
    cfg.grid = grid;
    cfg.tasks = tasks;
    cfg.t_max = settings.t_max;
    cfg.collision = settings.collision;
    cfg.action_mask = settings.action_mask;
    Episode ep(cfg);
    ep.reset(seed);
    std::mt19937_64 rng(seed);
    while (!ep.state().finished()) {
      const JointAction joint = random_policy(grid, ep.state(), rng, settings.action_mask);
      std::vector<Position> intents;
      for (int i = 0; i < n; ++i)
        intents.push_back(apply_action(ep.state().positions[static_cast<std::size_t>(i)],
                                       joint[static_cast<std::size_t>(i)], grid)
                              .position);
      if (monitor.observe(grid, ep.state(), intents)) rec.deadlock = true;
      const StepResult r = ep.step(joint);
      rec.collisions += static_cast<int>(r.info.collisions.size());
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    out.trace = ep.trace();
    if (ep.state().terminated) {
      rec.status = RunStatus::kSuccess;
      rec.timesteps = ep.state().t;
      rec.sum_of_costs = trace_sum_of_costs(out.trace);
    } else {
      rec.status = RunStatus::kTruncated;
    }
    return out;
  }

  SolverBudget budget = settings.budget;
  budget.horizon = std::min(budget.horizon, settings.t_max);
  const Solution sol = algo == Algorithm::kCbs ? solve_cbs(grid, tasks, budget) : solve_ma_astar(grid, tasks, budget);
  rec.wall_ms = sol.wall_ms;
  if (!sol.solved()) {
    rec.status = sol.status == SolveStatus::kTimeout ? RunStatus::kTimeout : RunStatus::kInfeasible;
    return out;
  }
  const auto problems = validate_solution(grid, tasks, sol.paths);
  if (!problems.empty()) throw StateError(rec.algorithm + " returned an invalid plan: " + problems.front());
  bool deadlock = false;
  out.trace = replay_plans(grid, tasks, sol.paths, CollisionModel::kStandard, settings.t_max, &monitor, &deadlock);
  const EpisodeReturns returns = episode_reward(out.trace);
  if (!out.trace.terminated() || out.trace.end_time() != sol.makespan || returns.total != 1.5 * n) {
    throw StateError(rec.algorithm + " plan does not replay to a clean termination");
  }
  for (const TraceRecord& step : out.trace.steps) rec.collisions += static_cast<int>(step.collisions.size());
  rec.status = RunStatus::kSuccess;
  rec.timesteps = sol.makespan;
  rec.sum_of_costs = sol.sum_of_costs;
  rec.deadlock = deadlock;
  return out;
}

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchmarkSpec {
  GridLayout grid;
  int n_agents = 4;
  int instances = 100;
  std::vector<Algorithm> algorithms;
  std::uint64_t base_seed = kDefaultBaseSeed;
  RunSettings settings;
  int jobs = 1;

  void validate() const {
    if (n_agents < 1) throw ConfigError("agent count must be >= 1");
    if (instances < 1) throw ConfigError("instance count must be >= 1");
    if (algorithms.empty()) throw ConfigError("no algorithms selected");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (settings.t_max < 1) throw ConfigError("t_max must be >= 1");
    settings.budget.validate();
  }
};

struct Quartiles {
  double q1 = 0, median = 0, q3 = 0;
  double whisker_low = 0, whisker_high = 0;  // extreme data points within 1.5 IQR
  std::vector<double> outliers;
};

// Linear interpolation between order statistics (the R type 7 rule).
inline double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return std::nan("");
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Quartiles box_stats(std::vector<double> values) {
  Quartiles out;
  if (values.empty()) {
    out.q1 = out.median = out.q3 = out.whisker_low = out.whisker_high = std::nan("");
    return out;
  }
  std::sort(values.begin(), values.end());
  out.q1 = quantile(values, 0.25);
  out.median = quantile(values, 0.5);
  out.q3 = quantile(values, 0.75);
  const double iqr = out.q3 - out.q1;
  const double lo = out.q1 - 1.5 * iqr, hi = out.q3 + 1.5 * iqr;
  out.whisker_low = values.back();
  out.whisker_high = values.front();
  for (double v : values) {
    if (v < lo || v > hi) {
      out.outliers.push_back(v);
    } else {
      out.whisker_low = std::min(out.whisker_low, v);
      out.whisker_high = std::max(out.whisker_high, v);
    }
  }
  return out;
}

struct Summary {
  std::string algorithm;
  int instances = 0;
  int successes = 0;
  double success_rate = 0.0;
  Quartiles timesteps;  // over successful runs
  double mean_wall_ms = 0.0;
  double median_wall_ms = 0.0;
  int deadlock_runs = 0;
};

inline Summary summarize(const std::vector<RunRecord>& records, const std::string& algorithm) {
  Summary s;
  s.algorithm = algorithm;
  std::vector<double> steps, walls;
  for (const RunRecord& r : records) {
    if (r.algorithm != algorithm) continue;
    ++s.instances;
    walls.push_back(r.wall_ms);
    if (r.deadlock) ++s.deadlock_runs;
    if (r.success()) {
      ++s.successes;
      steps.push_back(static_cast<double>(*r.timesteps));
    }
  }
  s.success_rate = s.instances ? static_cast<double>(s.successes) / s.instances : 0.0;
  s.timesteps = box_stats(steps);
  double sum = 0;
  for (double w : walls) sum += w;
  s.mean_wall_ms = walls.empty() ? 0.0 : sum / static_cast<double>(walls.size());
  s.median_wall_ms = walls.empty() ? 0.0 : quantile(walls, 0.5);
  return s;
}

struct BenchResult {
  std::vector<RunRecord> records;  // instance-major, algorithms in spec order
  std::vector<Summary> summaries;  // one per algorithm
  std::map<std::string, HeatMap> heatmaps;  // per algorithm, successful runs only
};

// Instance i uses seed base_seed + i for both task sampling and the random
// policy. Work is spread over `jobs` threads; results do not depend on it.
inline BenchResult run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  const std::size_t n_algos = spec.algorithms.size();
  const std::size_t total = static_cast<std::size_t>(spec.instances) * n_algos;
  std::vector<TaskSet> tasks(static_cast<std::size_t>(spec.instances));
  for (int i = 0; i < spec.instances; ++i)
    tasks[static_cast<std::size_t>(i)] = sample_tasks(spec.grid, spec.n_agents, spec.base_seed + static_cast<std::uint64_t>(i));

  std::vector<RunRecord> records(total);
  std::vector<HeatMap> heat(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      try {
        const int i = static_cast<int>(k / n_algos);
        const Algorithm algo = spec.algorithms[k % n_algos];
        const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(i);
        RunOutput out = run_instance(spec.grid, tasks[static_cast<std::size_t>(i)], algo, i, seed, spec.settings);
        HeatMap h(spec.grid.rows(), spec.grid.cols());
        if (out.record.success()) accumulate_heatmap(h, spec.grid, out.trace);
        records[k] = std::move(out.record);
        heat[k] = std::move(h);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int threads = std::min<int>(spec.jobs, static_cast<int>(total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchResult result;
  result.records = std::move(records);
  for (Algorithm a : spec.algorithms) {
    result.summaries.push_back(summarize(result.records, to_string(a)));
    result.heatmaps.emplace(to_string(a), HeatMap(spec.grid.rows(), spec.grid.cols()));
  }
  for (std::size_t k = 0; k < total; ++k) result.heatmaps.at(result.records[k].algorithm).merge(heat[k]);
  return result;
}

struct SweepRow {
  int agents = 0;
  Summary summary;
};

inline std::vector<SweepRow> scalability_sweep(BenchmarkSpec spec, int lo, int hi) {
  if (lo < 1 || hi < lo) throw ConfigError("agent range must be ascending and start at >= 1");
  const int free = static_cast<int>(spec.grid.free_cells().size());
  if (2 * hi > free) {
    throw CapacityError(std::to_string(hi) + " agents need " + std::to_string(2 * hi) + " free cells, layout has " +
                        std::to_string(free));
  }
  std::vector<SweepRow> rows;
  for (int n = lo; n <= hi; ++n) {
    spec.n_agents = n;
    const BenchResult r = run_benchmark(spec);
    for (const Summary& s : r.summaries) rows.push_back({n, s});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output

inline const char* kRecordCsvHeader = "instance,seed,algorithm,status,timesteps,sum_of_costs,wall_ms,collisions,deadlock";

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_records_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kRecordCsvHeader << '\n';
  for (const RunRecord& r : records) {
    os << r.instance << ',' << r.seed << ',' << r.algorithm << ',' << to_string(r.status) << ','
       << (r.timesteps ? std::to_string(*r.timesteps) : "") << ','
       << (r.sum_of_costs ? std::to_string(*r.sum_of_costs) : "") << ',' << format_double(r.wall_ms) << ','
       << r.collisions << ',' << (r.deadlock ? 1 : 0) << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back().push_back(c);
    }
  }
  return out;
}

inline std::vector<RunRecord> parse_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DecodeError("empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordCsvHeader) throw DecodeError("unexpected results header: " + line);
  std::vector<RunRecord> out;
  int row = 1;
  auto number = [&](const std::string& s, auto& value) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw DecodeError("row " + std::to_string(row) + ": bad number '" + s + "'");
    }
  };
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw DecodeError("row " + std::to_string(row) + ": expected 9 fields");
    RunRecord r;
    number(f[0], r.instance);
    number(f[1], r.seed);
    r.algorithm = f[2];
    r.status = run_status_from_string(f[3]);
    if (!f[4].empty()) number(f[4], r.timesteps.emplace());
    if (!f[5].empty()) number(f[5], r.sum_of_costs.emplace());
    number(f[6], r.wall_ms);
    number(f[7], r.collisions);
    int dl = 0;
    number(f[8], dl);
    r.deadlock = dl != 0;
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json record_json(const RunRecord& r) {
  return {{"instance", r.instance},
          {"seed", r.seed},
          {"algorithm", r.algorithm},
          {"status", to_string(r.status)},
          {"timesteps", r.timesteps ? nlohmann::json(*r.timesteps) : nlohmann::json(nullptr)},
          {"sum_of_costs", r.sum_of_costs ? nlohmann::json(*r.sum_of_costs) : nlohmann::json(nullptr)},
          {"wall_ms", r.wall_ms},
          {"collisions", r.collisions},
          {"deadlock", r.deadlock}};
}

inline nlohmann::json summary_json(const Summary& s) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"algorithm", s.algorithm},
          {"instances", s.instances},
          {"successes", s.successes},
          {"success_rate", s.success_rate},
          {"timesteps",
           {{"q1", num(s.timesteps.q1)},
            {"median", num(s.timesteps.median)},
            {"q3", num(s.timesteps.q3)},
            {"whisker_low", num(s.timesteps.whisker_low)},
            {"whisker_high", num(s.timesteps.whisker_high)},
            {"outliers", s.timesteps.outliers}}},
          {"mean_wall_ms", s.mean_wall_ms},
          {"median_wall_ms", s.median_wall_ms},
          {"deadlock_runs", s.deadlock_runs}};
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

enum class ExportFormat { kCsv, kJson };

inline void export_results(const std::vector<RunRecord>& records, ExportFormat format,
                           const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  if (format == ExportFormat::kCsv) {
    write_records_csv(out, records);
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const RunRecord& r : records) arr.push_back(record_json(r));
    out << arr.dump(2) << '\n';
  }
  close_output(out, path);
}

inline std::vector<RunRecord> load_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_records_csv(in);
}

enum class HeatFormat { kCsv, kPgm };

inline void write_heatmap(std::ostream& os, const HeatMap& map, HeatFormat format) {
  if (format == HeatFormat::kCsv) {
    for (int r = 0; r < map.rows; ++r) {
      for (int c = 0; c < map.cols; ++c) os << (c ? "," : "") << map.at(r, c);
      os << '\n';
    }
    return;
  }
  std::int64_t maxval = 0;
  for (auto v : map.counts) maxval = std::max(maxval, v);
  if (maxval == 0) maxval = 1;
  if (maxval > 65535) throw InputError("heat map counts exceed the PGM range");
  os << "P2\n" << map.cols << ' ' << map.rows << '\n' << maxval << '\n';
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) os << (c ? " " : "") << map.at(r, c);
    os << '\n';
  }
}

inline void render_heatmap(const HeatMap& map, HeatFormat format, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  write_heatmap(out, map, format);
  close_output(out, path);
}

inline HeatFormat heat_format_for(const std::filesystem::path& path) {
  return path.extension() == ".pgm" ? HeatFormat::kPgm : HeatFormat::kCsv;
}

inline const char* kSweepCsvHeader =
    "agents,algorithm,instances,successes,success_rate,q1_timesteps,median_timesteps,q3_timesteps,mean_wall_ms,"
    "median_wall_ms,deadlock_runs";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  os << kSweepCsvHeader << '\n';
  for (const SweepRow& row : rows) {
    const Summary& s = row.summary;
    os << row.agents << ',' << s.algorithm << ',' << s.instances << ',' << s.successes << ','
       << format_double(s.success_rate) << ',' << num(s.timesteps.q1) << ',' << num(s.timesteps.median) << ','
       << num(s.timesteps.q3) << ',' << format_double(s.mean_wall_ms) << ',' << format_double(s.median_wall_ms)
       << ',' << s.deadlock_runs << '\n';
  }
}

}  // namespace mapfdl
