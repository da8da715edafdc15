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

// mapfdl command-line interface: solve, bench, sweep, oracle, deadlock check,
// serve and export-layouts.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mapfdl/bench.hpp"
#include "mapfdl/deadlock.hpp"
#include "mapfdl/layouts.hpp"
#include "mapfdl/protocol.hpp"
#include "mapfdl/solvers.hpp"

namespace {

using namespace mapfdl;

std::uint64_t base_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("MAPF_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("MAPF_SEED is not an unsigned integer: ") + env);
  }
  return kDefaultBaseSeed;
}

std::vector<Algorithm> parse_algorithms(const std::string& list) {
  std::vector<Algorithm> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(algorithm_from_string(item));
  if (out.empty()) throw ConfigError("no algorithms selected");
  return out;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ConfigError("agent range must look like LO..HI, got '" + text + "'");
  }
}

struct LayoutArgs {
  std::string layout;
  std::string variant;
  std::string layout_dir;

  void add_to(CLI::App* app) {
    app->add_option("--layout", layout, "reference model id (rm1.1 .. rm3.1) or layout file")->required();
    app->add_option("--variant", variant, "reference model variant");
    app->add_option("--layout-dir", layout_dir, "directory searched for layout names");
  }

  ResolvedLayout resolve() const { return resolve_layout(layout, variant, {}, layout_dir); }
};

void print_summary(const Summary& s) {
  std::cout << std::left << std::setw(10) << s.algorithm << " success " << s.successes << "/" << s.instances << " ("
            << std::fixed << std::setprecision(1) << 100.0 * s.success_rate << "%)";
  if (s.successes > 0) {
    std::cout << "  timesteps median " << s.timesteps.median << " [q1 " << s.timesteps.q1 << ", q3 "
              << s.timesteps.q3 << "]";
  }
  std::cout << "  mean wall " << std::setprecision(1) << s.mean_wall_ms << " ms";
  if (s.deadlock_runs > 0) std::cout << "  deadlock runs " << s.deadlock_runs;
  std::cout << std::defaultfloat << '\n';
}

std::filesystem::path heatmap_path_for(const std::filesystem::path& base, const std::string& algo, bool several) {
  if (!several) return base;
  std::filesystem::path p = base;
  p.replace_filename(base.stem().string() + "-" + algo + base.extension().string());
  return p;
}

TcpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mapfdl: multi-agent path finding deadlock benchmarks"};
  app.require_subcommand(1);

  // solve
  LayoutArgs solve_layout;
  int solve_agents = 0;
  std::string solve_algo;
  std::optional<std::uint64_t> solve_seed;
  std::int64_t solve_budget = 60000;
  std::string solve_collision = "standard";
  std::string solve_out;
  auto* solve = app.add_subcommand("solve", "plan one instance with MA-A* or CBS");
  solve_layout.add_to(solve);
  solve->add_option("--agents", solve_agents, "number of agents")->required()->check(CLI::PositiveNumber);
  solve->add_option("--algo", solve_algo, "ma-astar or cbs")->required()->check(CLI::IsMember({"ma-astar", "cbs"}));
  solve->add_option("--seed", solve_seed, "task sampling seed (default: the layout's own tasks if it has them)");
  solve->add_option("--budget-ms", solve_budget, "wall-clock budget")->check(CLI::PositiveNumber);
  solve->add_option("--collision", solve_collision, "conflict model")->check(CLI::IsMember({"strict", "standard"}));
  solve->add_option("--out", solve_out, "solution JSON file")->required();

  // bench
  LayoutArgs bench_layout;
  int bench_agents = 4, bench_episodes = 100, bench_jobs = 1, bench_tmax = 100;
  std::string bench_algos, bench_out, bench_heat, bench_summary, bench_collision = "strict";
  std::optional<std::uint64_t> bench_seed;
  std::int64_t bench_budget = 60000;
  bool bench_mask = false;
  auto* bench = app.add_subcommand("bench", "run seeded instances and record outcomes");
  bench_layout.add_to(bench);
  bench->add_option("--agents", bench_agents, "number of agents")->required()->check(CLI::PositiveNumber);
  bench->add_option("--episodes", bench_episodes, "instances per algorithm")->required()->check(CLI::PositiveNumber);
  bench->add_option("--algos", bench_algos, "comma list of ma-astar, cbs, random")->required();
  bench->add_option("--seed", bench_seed, "base seed (default 42 or MAPF_SEED)");
  bench->add_option("--budget-ms", bench_budget, "per-instance wall-clock budget")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "results file (.csv or .json)")->required();
  bench->add_option("--heatmap", bench_heat, "visit heat map (.csv or .pgm)");
  bench->add_option("--summary", bench_summary, "summary JSON file");
  bench->add_option("--jobs", bench_jobs, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--t-max", bench_tmax, "episode cap and planning horizon")->check(CLI::PositiveNumber);
  bench->add_option("--collision", bench_collision, "collision model of random-policy episodes")
      ->check(CLI::IsMember({"strict", "standard"}));
  bench->add_flag("--action-mask", bench_mask, "mask colliding actions for the random policy");

  // sweep
  LayoutArgs sweep_layout;
  std::string sweep_range, sweep_algos, sweep_out;
  int sweep_episodes = 50, sweep_jobs = 1;
  std::optional<std::uint64_t> sweep_seed;
  std::int64_t sweep_budget = 60000;
  auto* sweep = app.add_subcommand("sweep", "success rate as a function of the agent count");
  sweep_layout.add_to(sweep);
  sweep->add_option("--agents", sweep_range, "agent range LO..HI")->required();
  sweep->add_option("--episodes", sweep_episodes, "instances per agent count")->required()->check(CLI::PositiveNumber);
  sweep->add_option("--algos", sweep_algos, "comma list of ma-astar, cbs, random")->required();
  sweep->add_option("--seed", sweep_seed, "base seed (default 42 or MAPF_SEED)");
  sweep->add_option("--budget-ms", sweep_budget, "per-instance wall-clock budget")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "sweep CSV file")->required();
  sweep->add_option("--jobs", sweep_jobs, "worker threads")->check(CLI::PositiveNumber);

  // deadlock check
  std::string bankers_file;
  auto* deadlock = app.add_subcommand("deadlock", "deadlock tools");
  deadlock->require_subcommand(1);
  auto* check = deadlock->add_subcommand("check", "Banker's safety check of a state file");
  check->add_option("--file", bankers_file, "JSON {available, max, allocation}")->required();

  // oracle
  LayoutArgs oracle_layout;
  int oracle_agents = 2;
  std::optional<std::uint64_t> oracle_seed;
  std::size_t oracle_cap = 4'000'000;
  auto* oracle = app.add_subcommand("oracle", "exhaustive joint-state optimum for small instances");
  oracle_layout.add_to(oracle);
  oracle->add_option("--agents", oracle_agents, "number of agents")->required()->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed, "task sampling seed (default: the layout's own tasks if it has them)");
  oracle->add_option("--cap", oracle_cap, "refuse joint spaces above this many states");

  // serve
  bool serve_stdio = false;
  std::optional<int> serve_port;
  std::string serve_dir;
  int serve_sessions = 16;
  auto* serve = app.add_subcommand("serve", "episode control over JSON lines");
  auto* stdio_flag = serve->add_flag("--stdio", serve_stdio, "serve one session on stdin/stdout");
  auto* tcp_opt = serve->add_option("--tcp", serve_port, "listen on 127.0.0.1:PORT")->check(CLI::Range(0, 65535));
  stdio_flag->excludes(tcp_opt);
  serve->add_option("--layout-dir", serve_dir, "directory searched for layout names");
  serve->add_option("--max-sessions", serve_sessions, "concurrent TCP sessions")->check(CLI::PositiveNumber);

  // export-layouts
  std::string export_dir = "layouts";
  auto* export_cmd = app.add_subcommand("export-layouts", "write every reference model as text + JSON");
  export_cmd->add_option("--dir", export_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      const ResolvedLayout layout = solve_layout.resolve();
      TaskSet tasks;
      if (!solve_seed && layout.default_tasks && solve_agents <= static_cast<int>(layout.default_tasks->size())) {
        tasks.assign(layout.default_tasks->begin(), layout.default_tasks->begin() + solve_agents);
      } else {
        tasks = sample_tasks(layout.grid, solve_agents, base_seed(solve_seed));
      }
      SolverBudget budget;
      budget.wall_ms = solve_budget;
      Solution sol;
      if (solve_algo == "cbs") {
        if (solve_collision != "standard") throw ConfigError("cbs plans under the standard (vertex + swap) model only");
        sol = solve_cbs(layout.grid, tasks, budget);
      } else {
        MaAstarOptions opts;
        opts.strict = solve_collision == "strict";
        sol = solve_ma_astar(layout.grid, tasks, budget, opts);
      }
      nlohmann::json out = solution_to_json(sol);
      out["layout"] = layout.grid.name();
      out["algorithm"] = solve_algo;
      out["tasks"] = tasks_to_json(tasks);
      std::ofstream f = open_output(solve_out);
      f << out.dump(2) << '\n';
      close_output(f, solve_out);
      std::cout << solve_algo << ": " << to_string(sol.status);
      if (sol.solved()) std::cout << "  makespan " << sol.makespan << "  sum of costs " << sol.sum_of_costs;
      std::cout << "  expansions " << sol.expansions << "  " << std::fixed << std::setprecision(1) << sol.wall_ms
                << " ms\n";
      return 0;
    }

    if (*bench) {
      const ResolvedLayout layout = bench_layout.resolve();
      BenchmarkSpec spec;
      spec.grid = layout.grid;
      spec.n_agents = bench_agents;
      spec.instances = bench_episodes;
      spec.algorithms = parse_algorithms(bench_algos);
      spec.base_seed = base_seed(bench_seed);
      spec.settings.budget.wall_ms = bench_budget;
      spec.settings.t_max = bench_tmax;
      spec.settings.budget.horizon = bench_tmax;
      spec.settings.collision = collision_model_from_string(bench_collision);
      spec.settings.action_mask = bench_mask;
      spec.jobs = bench_jobs;
      const BenchResult result = run_benchmark(spec);
      const std::filesystem::path out = bench_out;
      export_results(result.records, out.extension() == ".json" ? ExportFormat::kJson : ExportFormat::kCsv, out);
      for (const Summary& s : result.summaries) print_summary(s);
      if (!bench_heat.empty()) {
        const bool several = result.heatmaps.size() > 1;
        for (const auto& [algo, map] : result.heatmaps) {
          const auto path = heatmap_path_for(bench_heat, algo, several);
          render_heatmap(map, heat_format_for(path), path);
        }
      }
      if (!bench_summary.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Summary& s : result.summaries) arr.push_back(summary_json(s));
        std::ofstream f = open_output(bench_summary);
        f << arr.dump(2) << '\n';
        close_output(f, bench_summary);
      }
      return 0;
    }

    if (*sweep) {
      const ResolvedLayout layout = sweep_layout.resolve();
      const auto [lo, hi] = parse_range(sweep_range);
      BenchmarkSpec spec;
      spec.grid = layout.grid;
      spec.instances = sweep_episodes;
      spec.algorithms = parse_algorithms(sweep_algos);
      spec.base_seed = base_seed(sweep_seed);
      spec.settings.budget.wall_ms = sweep_budget;
      spec.jobs = sweep_jobs;
      const auto rows = scalability_sweep(spec, lo, hi);
      std::ofstream f = open_output(sweep_out);
      write_sweep_csv(f, rows);
      close_output(f, sweep_out);
      for (const SweepRow& row : rows) {
        std::cout << std::setw(3) << row.agents << " agents  ";
        print_summary(row.summary);
      }
      return 0;
    }

    if (*check) {
      std::ifstream in(bankers_file);
      if (!in) throw IoError("cannot open " + bankers_file);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw DecodeError(bankers_file + ": " + e.what());
      }
      const SafetyResult r = is_safe(bankers_from_json(j));
      if (r.safe) {
        std::cout << "safe\norder:";
        for (int p : r.order) std::cout << " P" << p;
        std::cout << '\n';
      } else {
        std::cout << "unsafe\n";
      }
      return 0;
    }

    if (*oracle) {
      const ResolvedLayout layout = oracle_layout.resolve();
      TaskSet tasks;
      if (!oracle_seed && layout.default_tasks && oracle_agents <= static_cast<int>(layout.default_tasks->size())) {
        tasks.assign(layout.default_tasks->begin(), layout.default_tasks->begin() + oracle_agents);
      } else {
        tasks = sample_tasks(layout.grid, oracle_agents, base_seed(oracle_seed));
      }
      const OracleResult r = joint_bfs_oracle(layout.grid, tasks, oracle_cap);
      nlohmann::json out{{"layout", layout.grid.name()}, {"tasks", tasks_to_json(tasks)}, {"feasible", r.feasible},
                         {"states", r.states}};
      if (r.feasible) {
        out["makespan"] = r.makespan;
        out["sum_of_costs"] = r.sum_of_costs;
        Solution witness;
        witness.status = SolveStatus::kSolved;
        witness.paths = r.witness;
        out["witness"] = solution_to_json(witness)["paths"];
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (*serve) {
      ServerOptions options;
      options.layout_dir = serve_dir;
      options.max_sessions = serve_sessions;
      options.base_seed = base_seed(std::nullopt);
      if (serve_port) {
        TcpServer server(options);
        const int port = server.bind(*serve_port);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "listening on 127.0.0.1:" << port << std::endl;
        server.run();
        g_server = nullptr;
        return 0;
      }
      if (!serve_stdio) throw ConfigError("serve needs --stdio or --tcp PORT");
      serve_stream(std::cin, std::cout, options);
      return 0;
    }

    if (*export_cmd) {
      for (Family f : kAllFamilies) {
        for (const std::string& v : family_variants(f)) {
          const BuiltLayout b = build_layout({f, v});
          write_layout_files(export_dir, b);
          std::cout << (std::filesystem::path(export_dir) / (b.grid.name() + ".txt")).string() << '\n';
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
