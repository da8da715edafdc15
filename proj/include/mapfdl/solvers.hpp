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

// Classical MAPF baselines: joint-state A* (makespan), Conflict-Based Search
// (sum of costs) over a space-time A*, a random policy, and an exhaustive
// joint-state oracle for tests.
//
// Both planners use the vertex + swap conflict model. An agent that has
// arrived stays on its goal for the rest of time.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapfdl/conflicts.hpp"
#include "mapfdl/episode.hpp"
#include "mapfdl/error.hpp"
#include "mapfdl/grid.hpp"
#include "mapfdl/layouts.hpp"

namespace mapfdl {

struct SolverBudget {
  std::int64_t wall_ms = 60000;
  std::optional<std::int64_t> max_expansions;
  int horizon = 100;
  // Joint states kept by MA-A* before it gives up (reported as timeout).
  std::size_t max_states = 6'000'000;

  void validate() const {
    if (wall_ms <= 0) throw ParameterError("wall-clock budget must be positive");
    if (max_expansions && *max_expansions <= 0) throw ParameterError("expansion budget must be positive");
    if (horizon < 1) throw ParameterError("horizon must be >= 1");
    if (max_states < 1) throw ParameterError("state cap must be positive");
  }
};

enum class SolveStatus { kSolved, kTimeout, kInfeasible };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSolved:
      return "solved";
    case SolveStatus::kTimeout:
      return "timeout";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "?";
}

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<Path> paths;  // up to each agent's arrival; implicit goal-stay afterwards
  int makespan = 0;
  int sum_of_costs = 0;
  std::int64_t expansions = 0;
  double wall_ms = 0.0;

  bool solved() const { return status == SolveStatus::kSolved; }
};

inline nlohmann::json solution_to_json(const Solution& s) {
  nlohmann::json paths = nlohmann::json::object();
  for (std::size_t i = 0; i < s.paths.size(); ++i) {
    nlohmann::json p = nlohmann::json::array();
    for (const Position& q : s.paths[i]) p.push_back(position_json(q));
    paths[std::to_string(i)] = p;
  }
  nlohmann::json out{{"status", to_string(s.status)}, {"wall_ms", s.wall_ms}, {"expansions", s.expansions},
                     {"paths", paths}};
  out["makespan"] = s.solved() ? nlohmann::json(s.makespan) : nlohmann::json(nullptr);
  out["sum_of_costs"] = s.solved() ? nlohmann::json(s.sum_of_costs) : nlohmann::json(nullptr);
  return out;
}

// Drops the goal-stay tail of each path so it ends at the arrival instant.
inline void trim_to_arrival(std::vector<Path>& paths) {
  for (Path& p : paths) p.resize(static_cast<std::size_t>(arrival_time(p)) + 1);
}

// Empty when the plans start and end at the tasks, use only legal moves and
// are free of vertex and swapping conflicts.
inline std::vector<std::string> validate_solution(const GridLayout& grid, const TaskSet& tasks,
                                                  const std::vector<Path>& paths) {
  std::vector<std::string> problems;
  if (paths.size() != tasks.size()) {
    problems.push_back("path count does not match task count");
    return problems;
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string who = "agent " + std::to_string(i);
    if (paths[i].empty()) {
      problems.push_back(who + ": empty path");
      continue;
    }
    if (paths[i].front() != tasks[i].start) problems.push_back(who + ": does not start at its start cell");
    if (paths[i].back() != tasks[i].goal) problems.push_back(who + ": does not end at its goal");
    for (std::size_t t = 0; t < paths[i].size(); ++t) {
      if (!grid.is_free(paths[i][t])) problems.push_back(who + ": occupies a blocked cell");
      if (t > 0 && manhattan(paths[i][t - 1], paths[i][t]) > 1) problems.push_back(who + ": jumps");
    }
  }
  if (!problems.empty()) return problems;
  for (const ConflictReport& c : classify_conflicts(paths)) {
    if (c.kind == ConflictKind::kVertex || c.kind == ConflictKind::kSwapping) {
      problems.push_back(to_string(c.kind) + " conflict at t=" + std::to_string(c.timestep));
    }
  }
  return problems;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Free cells renumbered densely, with each cell's reachable targets in action
// order (stay first). Blocked moves collapse onto stay and are not repeated.
struct CellGraph {
  std::vector<int> id_of;  // grid index -> dense id or -1
  std::vector<Position> cell;
  std::vector<std::vector<int>> moves;

  explicit CellGraph(const GridLayout& grid) : id_of(static_cast<std::size_t>(grid.size()), -1) {
    for (const Position& p : grid.free_cells()) {
      id_of[static_cast<std::size_t>(grid.index(p))] = static_cast<int>(cell.size());
      cell.push_back(p);
    }
    for (const Position& p : cell) {
      std::vector<int> out{id(grid, p)};
      for (Action a : {Action::kUp, Action::kRight, Action::kDown, Action::kLeft}) {
        const Position q = shifted(p, a);
        if (grid.is_free(q)) out.push_back(id(grid, q));
      }
      moves.push_back(std::move(out));
    }
  }

  int id(const GridLayout& grid, Position p) const { return id_of[static_cast<std::size_t>(grid.index(p))]; }
  int size() const { return static_cast<int>(cell.size()); }
};

inline void check_tasks(const GridLayout& grid, const TaskSet& tasks) {
  if (tasks.empty()) throw InputError("no tasks");
  const auto violations = validate_layout(grid, tasks);
  if (!violations.empty()) throw InputError("invalid tasks: " + violations.front());
}

// Enumerates joint moves of all agents from `cur` in lexicographic action
// order, skipping vertex and swap conflicts (and, when strict, any move into a
// cell occupied at the start of the step).
template <typename Visit>
void for_each_joint_move(const CellGraph& g, const std::vector<std::uint16_t>& cur, bool strict,
                         std::vector<std::uint16_t>& next, Visit&& visit) {
  const std::size_t n = cur.size();
  auto rec = [&](auto& self, std::size_t k) -> void {
    if (k == n) {
      visit(next);
      return;
    }
    for (int target : g.moves[cur[k]]) {
      const auto t = static_cast<std::uint16_t>(target);
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        if (next[j] == t) ok = false;
        if (next[j] == cur[k] && t == cur[j]) ok = false;
      }
      if (ok && strict && t != cur[k]) {
        for (std::size_t j = 0; j < n && ok; ++j)
          if (j != k && cur[j] == t) ok = false;
      }
      if (!ok) continue;
      next[k] = t;
      self(self, k + 1);
    }
  };
  rec(rec, 0);
}

}  // namespace detail

struct MaAstarOptions {
  bool strict = false;           // also forbid entering any occupied cell
  bool sum_heuristic = false;    // sum instead of max of distances (not admissible for makespan)
};

// A* over joint positions; one joint step costs 1, so g is the makespan.
inline Solution solve_ma_astar(const GridLayout& grid, const TaskSet& tasks, const SolverBudget& budget,
                               const MaAstarOptions& options = {}) {
  budget.validate();
  detail::check_tasks(grid, tasks);
  const auto started = detail::Clock::now();
  const detail::CellGraph g(grid);
  const std::size_t n = tasks.size();

  // States live in one flat arena of n dense cell ids each.
  std::vector<std::uint16_t> arena;
  auto state_hash = [&](std::uint32_t s) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t k = 0; k < n; ++k) {
      h ^= arena[s * n + k];
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  };
  auto state_eq = [&](std::uint32_t a, std::uint32_t b) {
    return std::equal(arena.begin() + static_cast<std::ptrdiff_t>(a * n), arena.begin() + static_cast<std::ptrdiff_t>(a * n + n),
                      arena.begin() + static_cast<std::ptrdiff_t>(b * n));
  };
  std::unordered_set<std::uint32_t, decltype(state_hash), decltype(state_eq)> index(1024, state_hash, state_eq);
  std::vector<int> best_g;
  std::vector<std::uint32_t> parent;
  std::vector<bool> closed;

  std::vector<std::vector<int>> dist(n, std::vector<int>(static_cast<std::size_t>(g.size())));
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < g.size(); ++c) dist[i][static_cast<std::size_t>(c)] = manhattan(g.cell[static_cast<std::size_t>(c)], tasks[i].goal);
  std::vector<std::uint16_t> goal(n);
  for (std::size_t i = 0; i < n; ++i) goal[i] = static_cast<std::uint16_t>(g.id(grid, tasks[i].goal));

  auto heuristic = [&](const std::uint16_t* s) {
    int h = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int d = dist[i][s[i]];
      h = options.sum_heuristic ? h + d : std::max(h, d);
    }
    return h;
  };

  struct Entry {
    int f;
    int h;
    std::uint64_t seq;
    std::uint32_t state;
    int g;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.seq > b.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  std::uint64_t seq = 0;

  Solution sol;
  auto finish = [&](SolveStatus status) {
    sol.status = status;
    sol.wall_ms = detail::elapsed_ms(started);
    return sol;
  };

  for (const Task& t : tasks) arena.push_back(static_cast<std::uint16_t>(g.id(grid, t.start)));
  index.insert(0);
  best_g.push_back(0);
  parent.push_back(0);
  closed.push_back(false);
  {
    const int h0 = heuristic(arena.data());
    if (h0 > budget.horizon) return finish(SolveStatus::kInfeasible);
    open.push({h0, h0, seq++, 0, 0});
  }

  std::vector<std::uint16_t> cur(n), next(n);
  bool out_of_budget = false;
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[e.state] || e.g != best_g[e.state]) continue;
    closed[e.state] = true;
    std::copy_n(arena.begin() + static_cast<std::ptrdiff_t>(e.state * n), n, cur.begin());
    if (cur == goal) {
      std::vector<std::uint32_t> chain{e.state};
      while (chain.back() != 0) chain.push_back(parent[chain.back()]);
      std::reverse(chain.begin(), chain.end());
      sol.paths.assign(n, {});
      for (std::uint32_t s : chain)
        for (std::size_t i = 0; i < n; ++i) sol.paths[i].push_back(g.cell[arena[s * n + i]]);
      trim_to_arrival(sol.paths);
      sol.makespan = makespan(sol.paths);
      sol.sum_of_costs = sum_of_costs(sol.paths);
      return finish(SolveStatus::kSolved);
    }
    ++sol.expansions;
    if ((budget.max_expansions && sol.expansions > *budget.max_expansions) ||
        ((sol.expansions & 255) == 0 && detail::elapsed_ms(started) > static_cast<double>(budget.wall_ms))) {
      --sol.expansions;
      return finish(SolveStatus::kTimeout);
    }
    const int child_g = e.g + 1;
    detail::for_each_joint_move(g, cur, options.strict, next, [&](const std::vector<std::uint16_t>& nb) {
      if (out_of_budget) return;
      const int h = heuristic(nb.data());
      if (child_g + h > budget.horizon) return;
      const auto candidate = static_cast<std::uint32_t>(best_g.size());
      arena.insert(arena.end(), nb.begin(), nb.end());
      auto [it, inserted] = index.insert(candidate);
      if (inserted) {
        if (best_g.size() >= budget.max_states) {
          out_of_budget = true;
          return;
        }
        best_g.push_back(child_g);
        parent.push_back(e.state);
        closed.push_back(false);
        open.push({child_g + h, h, seq++, candidate, child_g});
        return;
      }
      arena.resize(arena.size() - n);
      const std::uint32_t s = *it;
      if (closed[s] || best_g[s] <= child_g) return;
      best_g[s] = child_g;
      parent[s] = e.state;
      open.push({child_g + h, h, seq++, s, child_g});
    });
    if (out_of_budget) return finish(SolveStatus::kTimeout);
  }
  return finish(SolveStatus::kInfeasible);
}

// ---------------------------------------------------------------------------
// Conflict-Based Search

struct Constraint {
  enum class Kind { kVertex, kEdge };
  int agent = 0;
  Kind kind = Kind::kVertex;
  Position cell;  // vertex: the cell; edge: the origin
  Position to;    // edge: the destination
  int t = 0;      // vertex: the instant; edge: the move from t to t+1

  static Constraint vertex(int agent, Position cell, int t) { return {agent, Kind::kVertex, cell, cell, t}; }
  static Constraint edge(int agent, Position from, Position to, int t) { return {agent, Kind::kEdge, from, to, t}; }

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// Space-time A* for one agent. Returns the earliest-arrival path that obeys
// every constraint naming `agent`, ending once the agent can stay on its goal
// for good, or nothing within `horizon` steps.
//
// `avoid` is a conflict-avoidance table: among equally short paths the one
// with the fewest vertex/swap clashes against those plans wins. Entry `agent`
// of it is ignored.
inline std::optional<Path> low_level_astar(const GridLayout& grid, Position start, Position goal,
                                           const std::vector<Constraint>& constraints, int agent, int horizon,
                                           const std::vector<Path>* avoid = nullptr) {
  if (!grid.is_free(start) || !grid.is_free(goal)) throw InputError("start and goal must be free cells");
  if (horizon < manhattan(start, goal)) return std::nullopt;
  const int cells = grid.size();
  const auto slot = [&](Position p, int t) {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(cells) + static_cast<std::size_t>(grid.index(p));
  };
  std::unordered_set<std::size_t> vertex_ban;
  std::set<std::tuple<int, int, int>> edge_ban;  // (from index, to index, t)
  int goal_after = -1;
  for (const Constraint& c : constraints) {
    if (c.agent != agent) continue;
    if (c.t < 0) throw InputError("constraint time must be >= 0");
    if (c.kind == Constraint::Kind::kVertex) {
      if (c.t <= horizon) vertex_ban.insert(slot(c.cell, c.t));
      if (c.cell == goal) goal_after = std::max(goal_after, c.t);
    } else {
      edge_ban.insert({grid.index(c.cell), grid.index(c.to), c.t});
    }
  }
  if (vertex_ban.contains(slot(start, 0))) return std::nullopt;

  auto clashes = [&](Position p, Position q, int t) {
    if (!avoid) return 0;
    int k = 0;
    for (std::size_t j = 0; j < avoid->size(); ++j) {
      if (static_cast<int>(j) == agent) continue;
      const Path& other = (*avoid)[j];
      const Position now = position_at(other, t + 1);
      if (now == q || (p != q && now == p && position_at(other, t) == q)) ++k;
    }
    return k;
  };

  struct Entry {
    int f;
    int clashes;
    int h;
    std::uint64_t seq;
    std::size_t node;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.clashes != b.clashes) return a.clashes > b.clashes;
    if (a.h != b.h) return a.h > b.h;
    return a.seq > b.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  const std::size_t total = static_cast<std::size_t>(horizon + 1) * static_cast<std::size_t>(cells);
  std::vector<std::int64_t> parent(total, -2);  // -2 unseen, -1 root
  // Every path into a slot has the same length, so a slot is only revisited
  // through a parent with strictly fewer clashes.
  std::vector<int> best(total, std::numeric_limits<int>::max());
  std::uint64_t seq = 0;
  parent[slot(start, 0)] = -1;
  best[slot(start, 0)] = 0;
  open.push({manhattan(start, goal), 0, manhattan(start, goal), seq++, slot(start, 0)});
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (e.clashes > best[e.node]) continue;
    const int t = static_cast<int>(e.node / static_cast<std::size_t>(cells));
    const Position p = grid.position(static_cast<int>(e.node % static_cast<std::size_t>(cells)));
    if (p == goal && t > goal_after) {
      Path path;
      for (auto s = static_cast<std::int64_t>(e.node); s >= 0; s = parent[static_cast<std::size_t>(s)])
        path.push_back(grid.position(static_cast<int>(static_cast<std::size_t>(s) % static_cast<std::size_t>(cells))));
      std::reverse(path.begin(), path.end());
      return path;
    }
    if (t == horizon) continue;
    for (Action a : kAllActions) {
      const Position q = shifted(p, a);
      if (!grid.is_free(q)) continue;
      const std::size_t s = slot(q, t + 1);
      if (vertex_ban.contains(s)) continue;
      if (q != p && edge_ban.contains({grid.index(p), grid.index(q), t})) continue;
      const int h = manhattan(q, goal);
      if (t + 1 + h > horizon) continue;
      const int k = e.clashes + clashes(p, q, t);
      if (parent[s] != -2 && k >= best[s]) continue;
      parent[s] = static_cast<std::int64_t>(e.node);
      best[s] = k;
      open.push({t + 1 + h, k, h, seq++, s});
    }
  }
  return std::nullopt;
}

struct CbsConflict {
  enum class Kind { kVertex, kSwap };
  Kind kind;
  std::vector<int> agents;  // vertex: all agents on the cell; swap: {i, j}
  Position a;               // vertex cell, or i's origin
  Position b;               // swap: j's origin
  int t;                    // vertex: instant; swap: departure time
};

// Earliest conflict; a swap during t -> t+1 counts as happening at t+1. Ties
// go to the lowest agent pair.
inline std::optional<CbsConflict> first_conflict(const std::vector<Path>& paths, std::size_t* count = nullptr) {
  int horizon = 0;
  for (const Path& p : paths) horizon = std::max(horizon, static_cast<int>(p.size()));
  const int n = static_cast<int>(paths.size());
  std::optional<CbsConflict> best;
  std::pair<int, int> best_pair{n, n};
  int best_t = -1;
  std::size_t found = 0;
  auto better = [&](int t, std::pair<int, int> pair) { return !best || (t == best_t && pair < best_pair); };
  for (int t = 0; t < horizon; ++t) {
    // Vertex pile-ups at t, then swaps arriving at t.
    std::map<Position, std::vector<int>> at;
    for (int i = 0; i < n; ++i) at[position_at(paths[static_cast<std::size_t>(i)], t)].push_back(i);
    for (auto& [cell, agents] : at) {
      if (agents.size() < 2) continue;
      ++found;
      const std::pair<int, int> pair{agents[0], agents[1]};
      if (better(t, pair)) {
        best = CbsConflict{CbsConflict::Kind::kVertex, agents, cell, cell, t};
        best_pair = pair;
        best_t = t;
      }
    }
    if (t > 0) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const Position pi = position_at(paths[static_cast<std::size_t>(i)], t - 1);
          const Position pj = position_at(paths[static_cast<std::size_t>(j)], t - 1);
          if (pi != pj && position_at(paths[static_cast<std::size_t>(i)], t) == pj &&
              position_at(paths[static_cast<std::size_t>(j)], t) == pi) {
            ++found;
            if (better(t, {i, j})) {
              best = CbsConflict{CbsConflict::Kind::kSwap, {i, j}, pi, pj, t - 1};
              best_pair = {i, j};
              best_t = t;
            }
          }
        }
      }
    }
    if (best && !count) return best;
  }
  if (count) *count = found;
  return best;
}

namespace detail {

// Every conflict in the plans, earliest first and by lowest agent pair within
// one instant (swaps counted at their arrival time).
inline std::vector<CbsConflict> all_conflicts(const std::vector<Path>& paths) {
  int horizon = 0;
  for (const Path& p : paths) horizon = std::max(horizon, static_cast<int>(p.size()));
  const int n = static_cast<int>(paths.size());
  std::vector<CbsConflict> out;
  for (int t = 0; t < horizon; ++t) {
    std::vector<std::pair<std::pair<int, int>, CbsConflict>> now;
    std::map<Position, std::vector<int>> at;
    for (int i = 0; i < n; ++i) at[position_at(paths[static_cast<std::size_t>(i)], t)].push_back(i);
    for (auto& [cell, agents] : at)
      if (agents.size() > 1)
        now.push_back({{agents[0], agents[1]}, {CbsConflict::Kind::kVertex, agents, cell, cell, t}});
    for (int i = 0; t > 0 && i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Position pi = position_at(paths[static_cast<std::size_t>(i)], t - 1);
        const Position pj = position_at(paths[static_cast<std::size_t>(j)], t - 1);
        if (pi != pj && position_at(paths[static_cast<std::size_t>(i)], t) == pj &&
            position_at(paths[static_cast<std::size_t>(j)], t) == pi)
          now.push_back({{i, j}, {CbsConflict::Kind::kSwap, {i, j}, pi, pj, t - 1}});
      }
    }
    std::stable_sort(now.begin(), now.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& c : now) out.push_back(std::move(c.second));
  }
  return out;
}

// Cells of every constraint-respecting walk from (start, 0) to (goal, cost),
// one bitmap over grid indices per instant.
inline std::vector<std::vector<char>> mdd_levels(const GridLayout& grid, Position start, Position goal,
                                                 const std::vector<Constraint>& constraints, int agent, int cost) {
  const std::size_t cells = static_cast<std::size_t>(grid.size());
  const auto levels = static_cast<std::size_t>(cost + 1);
  std::vector<std::vector<char>> banned(levels, std::vector<char>(cells, 0));
  std::set<std::tuple<int, int, int>> edge_ban;
  for (const Constraint& c : constraints) {
    if (c.agent != agent) continue;
    if (c.kind == Constraint::Kind::kVertex) {
      if (c.t <= cost) banned[static_cast<std::size_t>(c.t)][static_cast<std::size_t>(grid.index(c.cell))] = 1;
    } else {
      edge_ban.insert({grid.index(c.cell), grid.index(c.to), c.t});
    }
  }
  auto allowed = [&](Position p, Position q, int t) {
    return grid.is_free(q) && !banned[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(grid.index(q))] &&
           (p == q || !edge_ban.contains({grid.index(p), grid.index(q), t}));
  };
  std::vector<std::vector<char>> fwd(levels, std::vector<char>(cells, 0));
  if (!banned[0][static_cast<std::size_t>(grid.index(start))]) fwd[0][static_cast<std::size_t>(grid.index(start))] = 1;
  for (int t = 0; t < cost; ++t)
    for (std::size_t k = 0; k < cells; ++k) {
      if (!fwd[static_cast<std::size_t>(t)][k]) continue;
      const Position p = grid.position(static_cast<int>(k));
      for (Action a : kAllActions) {
        const Position q = shifted(p, a);
        if (allowed(p, q, t)) fwd[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(grid.index(q))] = 1;
      }
    }
  std::vector<std::vector<char>> out(levels, std::vector<char>(cells, 0));
  out[static_cast<std::size_t>(cost)][static_cast<std::size_t>(grid.index(goal))] =
      fwd[static_cast<std::size_t>(cost)][static_cast<std::size_t>(grid.index(goal))];
  for (int t = cost - 1; t >= 0; --t)
    for (std::size_t k = 0; k < cells; ++k) {
      if (!fwd[static_cast<std::size_t>(t)][k]) continue;
      const Position p = grid.position(static_cast<int>(k));
      for (Action a : kAllActions) {
        const Position q = shifted(p, a);
        if (allowed(p, q, t) && out[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(grid.index(q))]) {
          out[static_cast<std::size_t>(t)][k] = 1;
          break;
        }
      }
    }
  return out;
}

// True when every optimal path of the agent is forced through `from` at t and
// `to` at t + 1 (vertex conflicts pass from == to); beyond its cost the agent
// sits on its goal.
inline bool forced_through(const std::vector<std::vector<char>>& mdd, const GridLayout& grid, Position from,
                           Position to, int t, bool edge) {
  auto only = [&](int when, Position p) {
    const auto cost = static_cast<int>(mdd.size()) - 1;
    const auto& level = mdd[static_cast<std::size_t>(std::min(when, cost))];
    return level[static_cast<std::size_t>(grid.index(p))] && std::count(level.begin(), level.end(), char{1}) == 1;
  };
  return edge ? only(t, from) && only(t + 1, to) : only(t, from);
}

// One agent's constraints in lookup form.
struct BanTable {
  std::unordered_set<std::uint64_t> vertex;  // (t, cell)
  std::set<std::tuple<int, int, int>> edge;  // (from, to, t)
  int goal_after = -1;                       // latest vertex constraint on the goal
  int last = -1;                             // latest constraint time of any kind

  BanTable(const GridLayout& grid, Position goal, const std::vector<Constraint>& constraints) {
    for (const Constraint& c : constraints) {
      last = std::max(last, c.t);
      if (c.kind == Constraint::Kind::kVertex) {
        vertex.insert(key(c.t, grid.index(c.cell)));
        if (c.cell == goal) goal_after = std::max(goal_after, c.t);
      } else {
        edge.insert({grid.index(c.cell), grid.index(c.to), c.t});
      }
    }
  }
  static std::uint64_t key(int t, int cell) {
    return (static_cast<std::uint64_t>(t) << 32) | static_cast<std::uint32_t>(cell);
  }
  bool move_ok(int from, int to, int t) const {
    return !vertex.contains(key(t + 1, to)) && (from == to || !edge.contains({from, to, t}));
  }
};

// Breadth-first distances over free cells, -1 where unreachable.
inline std::vector<int> distances_to(const GridLayout& grid, Position goal) {
  std::vector<int> dist(static_cast<std::size_t>(grid.size()), -1);
  std::vector<Position> queue{goal};
  dist[static_cast<std::size_t>(grid.index(goal))] = 0;
  for (std::size_t k = 0; k < queue.size(); ++k)
    for (Action a : {Action::kUp, Action::kRight, Action::kDown, Action::kLeft}) {
      const Position q = shifted(queue[k], a);
      if (grid.is_free(q) && dist[static_cast<std::size_t>(grid.index(q))] < 0) {
        dist[static_cast<std::size_t>(grid.index(q))] = dist[static_cast<std::size_t>(grid.index(queue[k]))] + 1;
        queue.push_back(q);
      }
    }
  return dist;
}

// Optimal joint sum of costs of two agents under their own constraints, no
// horizon. Returns -1 if they cannot both finish, or nullopt once more than
// `state_cap` states were generated.
inline std::optional<int> pair_sum_of_costs(const GridLayout& grid, const std::array<Task, 2>& tasks,
                                            const std::array<const BanTable*, 2>& bans,
                                            const std::array<const std::vector<int>*, 2>& dist,
                                            std::size_t state_cap) {
  const int cells = grid.size();
  // Past every constraint time the search no longer depends on t.
  const int settle = std::max(bans[0]->last, bans[1]->last) + 1;
  struct State {
    int a, b, t;
    bool fa, fb;
  };
  auto code = [&](const State& s) {
    return ((static_cast<std::uint64_t>(s.t) * static_cast<std::uint64_t>(cells) + static_cast<std::uint64_t>(s.a)) *
                static_cast<std::uint64_t>(cells) +
            static_cast<std::uint64_t>(s.b)) *
               4 +
           (s.fa ? 2u : 0u) + (s.fb ? 1u : 0u);
  };
  auto h = [&](const State& s) {
    return (s.fa ? 0 : (*dist[0])[static_cast<std::size_t>(s.a)]) + (s.fb ? 0 : (*dist[1])[static_cast<std::size_t>(s.b)]);
  };
  const int ga = grid.index(tasks[0].goal), gb = grid.index(tasks[1].goal);
  const State root{grid.index(tasks[0].start), grid.index(tasks[1].start), 0, false, false};
  if ((*dist[0])[static_cast<std::size_t>(root.a)] < 0 || (*dist[1])[static_cast<std::size_t>(root.b)] < 0) return -1;
  if (bans[0]->vertex.contains(BanTable::key(0, root.a)) || bans[1]->vertex.contains(BanTable::key(0, root.b)))
    return -1;

  struct Entry {
    int f, g;
    std::uint64_t seq;
    State s;
  };
  auto worse = [](const Entry& x, const Entry& y) {
    if (x.f != y.f) return x.f > y.f;
    if (x.g != y.g) return x.g < y.g;
    return x.seq > y.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  std::unordered_map<std::uint64_t, int> g_of;
  std::uint64_t seq = 0;
  auto push = [&](const State& s, int g) {
    const auto [it, fresh] = g_of.try_emplace(code(s), g);
    if (!fresh) {
      if (it->second <= g) return;
      it->second = g;
    }
    open.push({g + h(s), g, seq++, s});
  };
  push(root, 0);
  std::vector<int> moves_a, moves_b;
  auto moves = [&](int from, int t, const BanTable& ban, std::vector<int>& out) {
    out.clear();
    const Position p = grid.position(from);
    for (Action act : kAllActions) {
      const Position q = shifted(p, act);
      if (grid.is_free(q) && ban.move_ok(from, grid.index(q), t)) out.push_back(grid.index(q));
    }
  };
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (g_of[code(e.s)] < e.g) continue;
    const State& s = e.s;
    if (s.fa && s.fb) return e.g;
    if (g_of.size() > state_cap) return std::nullopt;
    // Declaring an agent finished costs nothing; it then never moves again.
    if (!s.fa && s.a == ga && s.t > bans[0]->goal_after) push({s.a, s.b, s.t, true, s.fb}, e.g);
    if (!s.fb && s.b == gb && s.t > bans[1]->goal_after) push({s.a, s.b, s.t, s.fa, true}, e.g);
    if (s.fa) moves_a.assign(1, s.a); else moves(s.a, s.t, *bans[0], moves_a);
    if (s.fb) moves_b.assign(1, s.b); else moves(s.b, s.t, *bans[1], moves_b);
    const int step = (s.fa ? 0 : 1) + (s.fb ? 0 : 1);
    const int next_t = std::min(s.t + 1, settle);
    for (int qa : moves_a)
      for (int qb : moves_b) {
        if (qa == qb || (qa == s.b && qb == s.a)) continue;
        push({qa, qb, next_t, s.fa, s.fb}, e.g + step);
      }
  }
  return -1;
}

}  // namespace detail

// Best-first search over constraint-tree nodes ordered by (sum of costs,
// number of conflicts, creation order). Each node stores only the path it
// replanned; full plans are rebuilt through the parent chain. Replanning
// breaks ties against the other agents' current plans.
//
// With `pair_heuristic` the cost is raised by an admissible estimate: every
// conflicting pair is weighted by how much its optimal two-agent plan exceeds
// the two current paths, and the weights of a greedy set of disjoint pairs are
// summed. Pairs whose search hits the state cap weigh 0.
struct CbsOptions {
  bool pair_heuristic = true;
  std::size_t pair_state_cap = 200'000;
};

inline Solution solve_cbs(const GridLayout& grid, const TaskSet& tasks, const SolverBudget& budget,
                          const CbsOptions& options = {}) {
  budget.validate();
  detail::check_tasks(grid, tasks);
  const auto started = detail::Clock::now();
  const std::size_t n = tasks.size();

  struct Node {
    std::int64_t parent;
    std::optional<Constraint> constraint;  // empty for the root
    int agent;                             // replanned agent (-1: root)
    Path path;
    int cost;
  };
  std::vector<Node> nodes;
  std::vector<Path> root_paths;

  auto plans_of = [&](std::int64_t id) {
    std::vector<Path> out(n);
    std::vector<bool> have(n, false);
    std::size_t missing = n;
    for (std::int64_t k = id; k >= 0 && missing > 0; k = nodes[static_cast<std::size_t>(k)].parent) {
      const Node& node = nodes[static_cast<std::size_t>(k)];
      if (node.agent >= 0 && !have[static_cast<std::size_t>(node.agent)]) {
        out[static_cast<std::size_t>(node.agent)] = node.path;
        have[static_cast<std::size_t>(node.agent)] = true;
        --missing;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!have[i]) out[i] = root_paths[i];
    return out;
  };
  auto constraints_of = [&](std::int64_t id, int agent) {
    std::vector<Constraint> out;
    for (std::int64_t k = id; k >= 0; k = nodes[static_cast<std::size_t>(k)].parent) {
      const Node& node = nodes[static_cast<std::size_t>(k)];
      if (node.constraint && node.constraint->agent == agent) out.push_back(*node.constraint);
    }
    return out;
  };
  auto cost_of = [](const Path& p) { return static_cast<int>(p.size()) - 1; };

  Solution sol;
  auto finish = [&](SolveStatus status) {
    sol.status = status;
    sol.wall_ms = detail::elapsed_ms(started);
    return sol;
  };

  int root_cost = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = low_level_astar(grid, tasks[i].start, tasks[i].goal, {}, static_cast<int>(i), budget.horizon,
                             &root_paths);
    if (!p) return finish(SolveStatus::kInfeasible);
    root_cost += cost_of(*p);
    root_paths.push_back(std::move(*p));
  }
  nodes.push_back({-1, std::nullopt, -1, {}, root_cost});

  std::vector<std::vector<int>> dist;
  for (const Task& task : tasks) dist.push_back(detail::distances_to(grid, task.goal));
  using PairKey = std::tuple<int, int, std::vector<int>, std::vector<int>>;
  std::map<PairKey, int> pair_weight;  // -1: the pair cannot finish
  auto encoded = [&](const std::vector<Constraint>& cs) {
    std::vector<std::array<int, 4>> rows;
    for (const Constraint& c : cs)
      rows.push_back({c.kind == Constraint::Kind::kVertex ? 0 : 1, grid.index(c.cell), grid.index(c.to), c.t});
    std::sort(rows.begin(), rows.end());
    std::vector<int> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return flat;
  };
  // nullopt: some pair cannot finish, so neither can the node.
  auto heuristic = [&](std::int64_t id, const std::vector<Path>& plans,
                       const std::vector<CbsConflict>& conflicts) -> std::optional<int> {
    if (!options.pair_heuristic) return 0;
    std::set<std::pair<int, int>> pairs;
    for (const CbsConflict& c : conflicts)
      for (std::size_t x = 0; x < c.agents.size(); ++x)
        for (std::size_t y = x + 1; y < c.agents.size(); ++y)
          pairs.insert(std::minmax(c.agents[x], c.agents[y]));
    std::vector<std::tuple<int, int, int>> edges;  // (weight, i, j)
    for (const auto& [i, j] : pairs) {
      const std::vector<Constraint> ci = constraints_of(id, i), cj = constraints_of(id, j);
      PairKey key{i, j, encoded(ci), encoded(cj)};
      auto it = pair_weight.find(key);
      if (it == pair_weight.end()) {
        const auto& ti = tasks[static_cast<std::size_t>(i)];
        const auto& tj = tasks[static_cast<std::size_t>(j)];
        const detail::BanTable bi(grid, ti.goal, ci), bj(grid, tj.goal, cj);
        const auto joint = detail::pair_sum_of_costs(grid, {ti, tj}, {&bi, &bj},
                                                     {&dist[static_cast<std::size_t>(i)], &dist[static_cast<std::size_t>(j)]},
                                                     options.pair_state_cap);
        int w = 0;
        if (joint && *joint < 0) {
          w = -1;
        } else if (joint) {
          w = std::max(0, *joint - cost_of(plans[static_cast<std::size_t>(i)]) - cost_of(plans[static_cast<std::size_t>(j)]));
        }
        it = pair_weight.emplace(std::move(key), w).first;
      }
      if (it->second < 0) return std::nullopt;
      if (it->second > 0) edges.push_back({it->second, i, j});
    }
    std::sort(edges.begin(), edges.end(), std::greater<>());
    std::vector<bool> used(n, false);
    int h = 0;
    for (const auto& [w, i, j] : edges) {
      if (used[static_cast<std::size_t>(i)] || used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(i)] = used[static_cast<std::size_t>(j)] = true;
      h += w;
    }
    return h;
  };

  // Among equal f, nodes with more of their cost already paid and fewer
  // conflicts go first, then the newest.
  struct Entry {
    int f;
    int h;
    std::size_t conflicts;
    std::uint64_t seq;
    std::int64_t node;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    if (a.conflicts != b.conflicts) return a.conflicts > b.conflicts;
    return a.seq < b.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  std::uint64_t seq = 0;
  {
    const auto conflicts = detail::all_conflicts(root_paths);
    const auto h = heuristic(0, root_paths, conflicts);
    if (!h) return finish(SolveStatus::kInfeasible);
    open.push({root_cost + *h, *h, conflicts.size(), seq++, 0});
  }

  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    const std::vector<Path> plans = plans_of(e.node);
    const std::vector<CbsConflict> conflicts = detail::all_conflicts(plans);
    if (conflicts.empty()) {
      sol.paths = plans;
      trim_to_arrival(sol.paths);
      sol.makespan = makespan(sol.paths);
      sol.sum_of_costs = sum_of_costs(sol.paths);
      return finish(SolveStatus::kSolved);
    }
    ++sol.expansions;
    if ((budget.max_expansions && sol.expansions > *budget.max_expansions) ||
        detail::elapsed_ms(started) > static_cast<double>(budget.wall_ms)) {
      --sol.expansions;
      return finish(SolveStatus::kTimeout);
    }
    // Cardinal conflicts (every agent involved is forced through it) first,
    // then semi-cardinal ones, then the earliest.
    std::vector<std::optional<std::vector<std::vector<char>>>> mdds(n);
    auto forced = [&](int agent, const CbsConflict& c) {
      auto& mdd = mdds[static_cast<std::size_t>(agent)];
      if (!mdd) {
        const auto& task = tasks[static_cast<std::size_t>(agent)];
        mdd = detail::mdd_levels(grid, task.start, task.goal, constraints_of(e.node, agent), agent,
                                 cost_of(plans[static_cast<std::size_t>(agent)]));
      }
      if (c.kind == CbsConflict::Kind::kVertex) return detail::forced_through(*mdd, grid, c.a, c.a, c.t, false);
      const bool first = agent == c.agents[0];
      return detail::forced_through(*mdd, grid, first ? c.a : c.b, first ? c.b : c.a, c.t, true);
    };
    const CbsConflict* conflict = &conflicts.front();
    int best_rank = -1;
    for (const CbsConflict& c : conflicts) {
      int hits = 0;
      for (int agent : c.agents) hits += forced(agent, c) ? 1 : 0;
      const int rank = hits == static_cast<int>(c.agents.size()) ? 2 : (hits > 0 ? 1 : 0);
      if (rank > best_rank) {
        best_rank = rank;
        conflict = &c;
      }
      if (rank == 2) break;
    }
    for (std::size_t k = 0; k < conflict->agents.size(); ++k) {
      const int agent = conflict->agents[k];
      Constraint c;
      if (conflict->kind == CbsConflict::Kind::kVertex) {
        c = Constraint::vertex(agent, conflict->a, conflict->t);
      } else if (k == 0) {
        c = Constraint::edge(agent, conflict->a, conflict->b, conflict->t);
      } else {
        c = Constraint::edge(agent, conflict->b, conflict->a, conflict->t);
      }
      std::vector<Constraint> mine = constraints_of(e.node, agent);
      mine.push_back(c);
      const auto& task = tasks[static_cast<std::size_t>(agent)];
      auto path = low_level_astar(grid, task.start, task.goal, mine, agent, budget.horizon, &plans);
      if (!path) continue;
      const int cost = nodes[static_cast<std::size_t>(e.node)].cost - cost_of(plans[static_cast<std::size_t>(agent)]) +
                       cost_of(*path);
      std::vector<Path> child_plans = plans;
      child_plans[static_cast<std::size_t>(agent)] = *path;
      nodes.push_back({e.node, c, agent, std::move(*path), cost});
      const auto id = static_cast<std::int64_t>(nodes.size() - 1);
      const auto child_conflicts = detail::all_conflicts(child_plans);
      const auto h = heuristic(id, child_plans, child_conflicts);
      if (h) open.push({cost + *h, *h, child_conflicts.size(), seq++, id});
    }
  }
  return finish(SolveStatus::kInfeasible);
}

// ---------------------------------------------------------------------------
// Random baseline

// Uniform over the five actions, or over the allowed ones when masking.
template <typename Rng>
JointAction random_policy(const GridLayout& grid, const EpisodeState& state, Rng& rng, bool masked = false) {
  JointAction out;
  out.reserve(static_cast<std::size_t>(state.agents()));
  for (int i = 0; i < state.agents(); ++i) {
    if (!masked) {
      std::uniform_int_distribution<int> pick(0, kNumActions - 1);
      out.push_back(action_from_code(pick(rng)));
      continue;
    }
    const ActionMask mask = action_mask(grid, state, i);
    std::vector<Action> allowed;
    for (Action a : kAllActions)
      if (mask[static_cast<std::size_t>(action_code(a))]) allowed.push_back(a);
    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    out.push_back(allowed[pick(rng)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

struct OracleResult {
  bool feasible = false;
  int makespan = 0;
  std::vector<Path> witness;  // makespan-optimal plans, trimmed to arrival
  int sum_of_costs = 0;
  std::size_t states = 0;     // joint states visited by the two searches
};

// Breadth-first search over joint positions for the makespan optimum, then a
// uniform-cost search over (positions, finished set) for the sum-of-costs
// optimum: an agent may declare itself finished on its goal, after which it
// never moves; every step costs the number of unfinished agents. Refuses
// instances whose joint space could exceed `state_cap`.
inline OracleResult joint_bfs_oracle(const GridLayout& grid, const TaskSet& tasks,
                                     std::size_t state_cap = 4'000'000) {
  detail::check_tasks(grid, tasks);
  const detail::CellGraph g(grid);
  const std::size_t n = tasks.size();
  if (n > 6) throw CapacityError("oracle supports at most 6 agents");
  double estimate = 1.0;
  for (std::size_t i = 0; i < n; ++i) estimate *= 2.0 * g.size();
  if (estimate > static_cast<double>(state_cap)) {
    throw CapacityError("joint state space of up to " + std::to_string(static_cast<long long>(estimate)) +
                        " states exceeds the oracle cap of " + std::to_string(state_cap));
  }
  const auto encode = [&](const std::vector<std::uint16_t>& s) {
    std::uint64_t key = 0;
    for (std::uint16_t c : s) key = key * static_cast<std::uint64_t>(g.size()) + c;
    return key;
  };
  std::vector<std::uint16_t> start(n), goal(n);
  for (std::size_t i = 0; i < n; ++i) {
    start[i] = static_cast<std::uint16_t>(g.id(grid, tasks[i].start));
    goal[i] = static_cast<std::uint16_t>(g.id(grid, tasks[i].goal));
  }

  OracleResult out;
  // Makespan: plain BFS with parent links.
  std::unordered_map<std::uint64_t, std::uint64_t> parent;
  std::unordered_map<std::uint64_t, std::vector<std::uint16_t>> decoded;
  std::deque<std::vector<std::uint16_t>> frontier{start};
  parent[encode(start)] = encode(start);
  decoded[encode(start)] = start;
  std::vector<std::uint16_t> next(n);
  bool found = false;
  while (!frontier.empty() && !found) {
    const std::vector<std::uint16_t> cur = frontier.front();
    frontier.pop_front();
    if (cur == goal) {
      found = true;
      break;
    }
    const std::uint64_t from = encode(cur);
    detail::for_each_joint_move(g, cur, false, next, [&](const std::vector<std::uint16_t>& nb) {
      const std::uint64_t key = encode(nb);
      if (parent.emplace(key, from).second) {
        decoded[key] = nb;
        frontier.push_back(nb);
      }
    });
  }
  out.states = parent.size();
  if (!parent.contains(encode(goal))) return out;
  out.feasible = true;
  {
    std::vector<std::uint64_t> chain{encode(goal)};
    while (chain.back() != encode(start)) chain.push_back(parent[chain.back()]);
    std::reverse(chain.begin(), chain.end());
    out.witness.assign(n, {});
    for (std::uint64_t key : chain)
      for (std::size_t i = 0; i < n; ++i) out.witness[i].push_back(g.cell[decoded[key][i]]);
    trim_to_arrival(out.witness);
    out.makespan = makespan(out.witness);
  }

  // Sum of costs: Dijkstra over (positions, finished mask).
  using Key = std::pair<std::uint64_t, std::uint32_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept { return std::hash<std::uint64_t>{}(k.first * 131 + k.second); }
  };
  std::unordered_map<Key, int, KeyHash> best;
  using Item = std::tuple<int, std::uint64_t, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const std::uint32_t all = (1u << n) - 1u;
  const auto decode = [&](std::uint64_t key) {
    std::vector<std::uint16_t> s(n);
    for (std::size_t i = n; i-- > 0;) {
      s[i] = static_cast<std::uint16_t>(key % static_cast<std::uint64_t>(g.size()));
      key /= static_cast<std::uint64_t>(g.size());
    }
    return s;
  };
  auto relax = [&](std::uint64_t pos, std::uint32_t mask, int cost) {
    auto [it, inserted] = best.emplace(Key{pos, mask}, cost);
    if (!inserted && it->second <= cost) return;
    it->second = cost;
    pq.push({cost, pos, mask});
  };
  relax(encode(start), 0, 0);
  while (!pq.empty()) {
    const auto [cost, pos, mask] = pq.top();
    pq.pop();
    if (best[{pos, mask}] != cost) continue;
    if (mask == all) {
      out.sum_of_costs = cost;
      break;
    }
    const std::vector<std::uint16_t> cur = decode(pos);
    for (std::size_t i = 0; i < n; ++i)
      if (!(mask & (1u << i)) && cur[i] == goal[i]) relax(pos, mask | (1u << i), cost);
    const int step = static_cast<int>(n) - std::popcount(mask);
    detail::for_each_joint_move(g, cur, false, next, [&](const std::vector<std::uint16_t>& nb) {
      for (std::size_t i = 0; i < n; ++i)
        if ((mask & (1u << i)) && nb[i] != cur[i]) return;
      relax(encode(nb), mask, cost + step);
    });
  }
  out.states += best.size();
  return out;
}

}  // namespace mapfdl
