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

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Everything here is deliberately naive and shares no code
// with the library beyond its data types.

#ifndef MAPFDL_TESTS_ORACLES_HPP_
#define MAPFDL_TESTS_ORACLES_HPP_

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mapfdl/deadlock.hpp"
#include "mapfdl/episode.hpp"
#include "mapfdl/layouts.hpp"
#include "mapfdl/solvers.hpp"

namespace mapfdl::oracle {

// ---------------------------------------------------------------------------
// Banker's

// Safe iff some permutation of the processes completes one after the other.
inline bool bankers_permutation_safe(const BankersState& s) {
  const int n = s.processes();
  const int m = s.resources();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  do {
    std::vector<int> work = s.available;
    bool ok = true;
    for (int p : order) {
      for (int r = 0; r < m && ok; ++r) {
        const int need = s.max[p][r] - s.allocation[p][r];
        ok = need <= work[r];
      }
      if (!ok) break;
      for (int r = 0; r < m; ++r) work[r] += s.allocation[p][r];
    }
    if (ok) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

// Replays an order and reports whether it completes every process.
inline bool bankers_order_completes(const BankersState& s, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != s.processes()) return false;
  std::set<int> seen(order.begin(), order.end());
  if (static_cast<int>(seen.size()) != s.processes()) return false;
  std::vector<int> work = s.available;
  for (int p : order) {
    for (int r = 0; r < s.resources(); ++r)
      if (s.max[p][r] - s.allocation[p][r] > work[r]) return false;
    for (int r = 0; r < s.resources(); ++r) work[r] += s.allocation[p][r];
  }
  return true;
}

template <typename Rng>
BankersState random_bankers_state(Rng& rng, int n, int m, int cap = 4) {
  std::uniform_int_distribution<int> small(0, cap);
  BankersState s;
  s.available.resize(static_cast<std::size_t>(m));
  for (int& a : s.available) a = small(rng) / 2;
  s.max.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(m)));
  s.allocation = s.max;
  for (int p = 0; p < n; ++p) {
    for (int r = 0; r < m; ++r) {
      s.max[p][r] = small(rng);
      s.allocation[p][r] = std::uniform_int_distribution<int>(0, s.max[p][r])(rng);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Resource allocation graphs

// Transitive closure by Floyd-Warshall; a cycle exists iff some node reaches
// itself.
inline bool reachability_has_cycle(const std::vector<std::vector<int>>& adj) {
  const std::size_t v = adj.size();
  std::vector<std::vector<char>> reach(v, std::vector<char>(v, 0));
  for (std::size_t a = 0; a < v; ++a)
    for (int b : adj[a]) reach[a][static_cast<std::size_t>(b)] = 1;
  for (std::size_t k = 0; k < v; ++k)
    for (std::size_t i = 0; i < v; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < v; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  for (std::size_t i = 0; i < v; ++i)
    if (reach[i][i]) return true;
  return false;
}

// Process nodes 0..n-1, resource nodes n..n+m-1; request edges point from a
// process to a resource, allocation edges back.
inline std::vector<std::vector<int>> rag_edges_adjacency(const ResourceAllocationGraph& g) {
  const int n = g.processes();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n + g.resources()));
  for (const auto& e : g.requests()) adj[static_cast<std::size_t>(e.process)].push_back(n + e.resource);
  for (const auto& e : g.allocations()) adj[static_cast<std::size_t>(n + e.resource)].push_back(e.process);
  return adj;
}

// Random graph; with `single_instance` every resource has one instance and
// every request asks for exactly one unit.
template <typename Rng>
ResourceAllocationGraph random_rag(Rng& rng, bool single_instance) {
  const int n = std::uniform_int_distribution<int>(1, 6)(rng);
  const int m = std::uniform_int_distribution<int>(1, 5)(rng);
  std::vector<int> instances(static_cast<std::size_t>(m));
  for (int& k : instances) k = single_instance ? 1 : std::uniform_int_distribution<int>(1, 3)(rng);
  ResourceAllocationGraph g(n, instances);
  std::bernoulli_distribution coin(0.35);
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < instances[static_cast<std::size_t>(r)]; ++k)
      if (coin(rng)) g.allocate(r, std::uniform_int_distribution<int>(0, n - 1)(rng));
  for (int p = 0; p < n; ++p)
    for (int r = 0; r < m; ++r)
      if (coin(rng)) g.request(p, r);
  return g;
}

// Runs the system forward: a process whose every requested resource is free
// acquires, finishes and releases everything it holds. Returns the processes
// that can never finish.
inline std::vector<int> simulate_stuck_processes(const ResourceAllocationGraph& g) {
  const int n = g.processes();
  std::vector<int> owner(static_cast<std::size_t>(g.resources()), -1);
  for (const auto& e : g.allocations()) owner[static_cast<std::size_t>(e.resource)] = e.process;
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  for (bool progress = true; progress;) {
    progress = false;
    for (int p = 0; p < n; ++p) {
      if (done[static_cast<std::size_t>(p)]) continue;
      bool can_run = true;
      for (const auto& e : g.requests())
        if (e.process == p && owner[static_cast<std::size_t>(e.resource)] != -1) can_run = false;
      if (!can_run) continue;
      done[static_cast<std::size_t>(p)] = true;
      for (int& o : owner)
        if (o == p) o = -1;
      progress = true;
    }
  }
  std::vector<int> stuck;
  for (int p = 0; p < n; ++p)
    if (!done[static_cast<std::size_t>(p)]) stuck.push_back(p);
  return stuck;
}

// ---------------------------------------------------------------------------
// Planning

using Joint = std::vector<Position>;

inline bool joint_move_ok(const Joint& from, const Joint& to) {
  for (std::size_t i = 0; i < to.size(); ++i)
    for (std::size_t j = i + 1; j < to.size(); ++j) {
      if (to[i] == to[j]) return false;
      if (to[i] == from[j] && to[j] == from[i]) return false;
    }
  return true;
}

inline void joint_successors(const GridLayout& grid, const Joint& cur, std::size_t k, Joint& next,
                             std::vector<Joint>& out) {
  if (k == cur.size()) {
    if (joint_move_ok(cur, next)) out.push_back(next);
    return;
  }
  for (Action a : kAllActions) {
    const Position q = shifted(cur[k], a);
    if (!grid.is_free(q)) continue;
    next[k] = q;
    joint_successors(grid, cur, k + 1, next, out);
  }
}

// Iterative deepening depth-first search with a transposition table keyed on
// the remaining depth. Returns the least makespan <= limit or nullopt.
inline std::optional<int> iddfs_makespan(const GridLayout& grid, const TaskSet& tasks, int limit) {
  Joint start, goal;
  for (const Task& t : tasks) {
    start.push_back(t.start);
    goal.push_back(t.goal);
  }
  for (int depth = 0; depth <= limit; ++depth) {
    std::map<Joint, int> explored;  // state -> largest remaining depth already searched
    auto dfs = [&](auto& self, const Joint& cur, int remaining) -> bool {
      if (cur == goal) return true;
      if (remaining == 0) return false;
      auto it = explored.find(cur);
      if (it != explored.end() && it->second >= remaining) return false;
      explored[cur] = remaining;
      std::vector<Joint> succ;
      Joint next(cur.size());
      joint_successors(grid, cur, 0, next, succ);
      for (const Joint& s : succ)
        if (self(self, s, remaining - 1)) return true;
      return false;
    };
    if (dfs(dfs, start, depth)) return depth;
  }
  return std::nullopt;
}

// Single-agent breadth-first search over (cell, t) honouring constraints.
// Arrival counts once the agent stands on the goal and no vertex constraint
// on the goal lies at or after that time.
inline std::optional<int> constrained_arrival(const GridLayout& grid, Position start, Position goal,
                                              const std::vector<Constraint>& cs, int horizon) {
  auto vertex_banned = [&](Position p, int t) {
    for (const Constraint& c : cs)
      if (c.kind == Constraint::Kind::kVertex && c.cell == p && c.t == t) return true;
    return false;
  };
  auto edge_banned = [&](Position a, Position b, int t) {
    for (const Constraint& c : cs)
      if (c.kind == Constraint::Kind::kEdge && c.cell == a && c.to == b && c.t == t) return true;
    return false;
  };
  int last_goal_ban = -1;
  for (const Constraint& c : cs)
    if (c.kind == Constraint::Kind::kVertex && c.cell == goal) last_goal_ban = std::max(last_goal_ban, c.t);
  if (vertex_banned(start, 0)) return std::nullopt;
  std::set<Position> layer{start};
  for (int t = 0; t <= horizon; ++t) {
    if (layer.count(goal) && t > last_goal_ban) return t;
    std::set<Position> next;
    for (const Position& p : layer)
      for (Action a : kAllActions) {
        const Position q = shifted(p, a);
        if (!grid.is_free(q) || vertex_banned(q, t + 1) || (q != p && edge_banned(p, q, t))) continue;
        next.insert(q);
      }
    layer = std::move(next);
  }
  return std::nullopt;
}

// Fixed 4x4 grid with three walls used for the exhaustive solver checks.
inline GridLayout four_by_four() { return GridLayout::from_text("....\n.##.\n...#\n....\n"); }

// Every 2-agent task set with distinct starts, distinct goals and start != goal.
inline std::vector<TaskSet> all_two_agent_tasks(const GridLayout& grid) {
  const auto cells = grid.free_cells();
  std::vector<TaskSet> out;
  for (const Position& s0 : cells)
    for (const Position& g0 : cells) {
      if (g0 == s0) continue;
      for (const Position& s1 : cells) {
        if (s1 == s0) continue;
        for (const Position& g1 : cells) {
          if (g1 == s1 || g1 == g0) continue;
          out.push_back({{s0, g0}, {s1, g1}});
        }
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Episode properties

// Checks one finished episode against the per-step and per-episode rules.
// Returns a description of the first violation, or an empty string.
inline std::string episode_violation(const Trace& trace, const EpisodeState& final_state, int t_max,
                                     const RewardWeights& w = {}) {
  const std::size_t n = trace.goals.size();
  std::vector<bool> flags(n, false);
  std::vector<bool> collided(n, false);
  std::vector<double> returns(n, 0.0);
  Joint prev = trace.initial_positions;
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const TraceRecord& rec = trace.steps[s];
    const std::string at = "t=" + std::to_string(rec.t) + ": ";
    if (rec.t != static_cast<int>(s) + 1) return at + "timestep does not advance by one";
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rec.positions[i] == rec.positions[j]) return at + "two agents share a cell";
    for (std::size_t i = 0; i < n; ++i)
      if (manhattan(prev[i], rec.positions[i]) > 1) return at + "an agent jumped";
    if (rec.terminated && rec.truncated) return at + "terminated and truncated together";
    const bool last = s + 1 == trace.steps.size();
    if (!last && (rec.terminated || rec.truncated)) return at + "episode continued after it ended";
    bool all_home = true;
    for (std::size_t i = 0; i < n; ++i) all_home = all_home && rec.positions[i] == trace.goals[i];
    if (rec.terminated != all_home) return at + "terminated disagrees with the all-at-goal test";
    if (rec.truncated != (!all_home && rec.t >= t_max)) return at + "truncated disagrees with the cap";
    std::set<int> hit(rec.collisions.begin(), rec.collisions.end());
    for (std::size_t i = 0; i < n; ++i) {
      const bool on_goal = rec.positions[i] == trace.goals[i];
      if (flags[i] && !rec.flags[i]) return at + "goal flag fell back";
      if (rec.flags[i] != (flags[i] || on_goal)) return at + "goal flag disagrees with positions";
      const bool first = !flags[i] && on_goal;
      const bool c = hit.count(static_cast<int>(i)) > 0;
      if (c && rec.positions[i] != prev[i]) return at + "a colliding agent moved";
      const double expect = (first ? w.alpha : 0.0) + (all_home ? w.beta : 0.0) + (c ? w.gamma : 0.0);
      if (rec.rewards[i] != expect) return at + "reward differs from the weighted sum";
      returns[i] += rec.rewards[i];
      collided[i] = collided[i] || c;
      flags[i] = rec.flags[i];
    }
    prev = rec.positions;
  }
  if (trace.steps.empty()) return "episode took no step";
  if (!trace.terminated() && !trace.truncated()) return "episode neither terminated nor truncated";
  const EpisodeReturns er = episode_reward(trace);
  for (std::size_t i = 0; i < n; ++i) {
    if (er.per_agent[i] != returns[i] || final_state.returns[i] != returns[i]) return "returns disagree";
    if (returns[i] > w.alpha + w.beta) return "return above alpha + beta";
    const bool perfect = flags[i] && trace.terminated() && !collided[i];
    if ((returns[i] == w.alpha + w.beta) != perfect) return "return equality characterization fails";
  }
  return {};
}

}  // namespace mapfdl::oracle

#endif  // MAPFDL_TESTS_ORACLES_HPP_
