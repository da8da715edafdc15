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

// Plan-level conflict taxonomy and the two MAPF objectives.
//
// A plan is the sequence of cells an agent occupies at t = 0, 1, ...; once a
// plan ends the agent is taken to stay on its last cell forever.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mapfdl/grid.hpp"

namespace mapfdl {

using Path = std::vector<Position>;

enum class ConflictKind { kVertex, kEdgeSameDirection, kFollowing, kCycle, kSwapping };

inline std::string to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::kVertex:
      return "vertex";
    case ConflictKind::kEdgeSameDirection:
      return "edge";
    case ConflictKind::kFollowing:
      return "following";
    case ConflictKind::kCycle:
      return "cycle";
    case ConflictKind::kSwapping:
      return "swapping";
  }
  return "?";
}

struct ConflictReport {
  ConflictKind kind;
  // vertex: every agent on the cell; following: {follower, leader};
  // cycle: rotation order, agents[k] moves into the cell agents[k+1] left.
  std::vector<int> agents;
  int timestep = 0;  // t of the transition t -> t+1 (vertex: the instant itself)
  std::vector<Position> locations;
};

inline Position position_at(const Path& path, int t) {
  if (path.empty()) throw InputError("empty plan");
  if (t < static_cast<int>(path.size())) return path[static_cast<std::size_t>(t)];
  return path.back();
}

// Reports every instance of each category. Categories overlap: a swap also
// yields two following reports, a cycle yields one following report per
// member, and an edge-same-direction conflict comes with its vertex
// conflicts. Rotations of exactly two agents are reported as swapping, not
// as cycles.
inline std::vector<ConflictReport> classify_conflicts(const std::vector<Path>& plans) {
  std::vector<ConflictReport> out;
  const int n = static_cast<int>(plans.size());
  if (n < 2) return out;
  int horizon = 0;
  for (const Path& p : plans) {
    if (p.empty()) throw InputError("empty plan");
    horizon = std::max(horizon, static_cast<int>(p.size()));
  }

  for (int t = 0; t < horizon; ++t) {
    std::map<Position, std::vector<int>> at;
    for (int i = 0; i < n; ++i) at[position_at(plans[static_cast<std::size_t>(i)], t)].push_back(i);
    for (auto& [cell, agents] : at) {
      if (agents.size() >= 2) out.push_back({ConflictKind::kVertex, agents, t, {cell}});
    }
  }

  for (int t = 0; t + 1 < horizon; ++t) {
    auto now = [&](int i) { return position_at(plans[static_cast<std::size_t>(i)], t); };
    auto next = [&](int i) { return position_at(plans[static_cast<std::size_t>(i)], t + 1); };

    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (now(i) == now(j) && next(i) == next(j) && now(i) != next(i)) {
          out.push_back({ConflictKind::kEdgeSameDirection, {i, j}, t, {now(i), next(i)}});
        }
        if (now(i) != now(j) && next(i) == now(j) && next(j) == now(i)) {
          out.push_back({ConflictKind::kSwapping, {i, j}, t, {now(i), now(j)}});
        }
      }
    }

    // follower -> leader whose vacated cell it enters
    std::vector<int> leader(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (next(i) == now(j) && next(j) != now(j) && now(i) != now(j)) {
          out.push_back({ConflictKind::kFollowing, {i, j}, t, {now(j)}});
          if (leader[static_cast<std::size_t>(i)] < 0) leader[static_cast<std::size_t>(i)] = j;
        }
      }
    }

    // Rotations are the cycles of the follower -> leader functional graph.
    std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done
    for (int s = 0; s < n; ++s) {
      if (state[static_cast<std::size_t>(s)] != 0) continue;
      std::vector<int> stack;
      int v = s;
      while (v >= 0 && state[static_cast<std::size_t>(v)] == 0) {
        state[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
        v = leader[static_cast<std::size_t>(v)];
      }
      if (v >= 0 && state[static_cast<std::size_t>(v)] == 1) {
        auto it = std::find(stack.begin(), stack.end(), v);
        std::vector<int> members(it, stack.end());
        if (members.size() >= 3) {
          std::vector<Position> cells;
          for (int a : members) cells.push_back(now(a));
          out.push_back({ConflictKind::kCycle, members, t, cells});
        }
      }
      for (int a : stack) state[static_cast<std::size_t>(a)] = 2;
    }
  }
  return out;
}

inline std::size_t count_kind(const std::vector<ConflictReport>& reports, ConflictKind kind) {
  return static_cast<std::size_t>(
      std::count_if(reports.begin(), reports.end(), [&](const ConflictReport& r) { return r.kind == kind; }));
}

// Smallest t such that the agent sits on its final cell for every t' >= t.
// Waiting on the goal after that instant is free.
inline int arrival_time(const Path& path) {
  if (path.empty()) return 0;
  int t = static_cast<int>(path.size()) - 1;
  while (t > 0 && path[static_cast<std::size_t>(t - 1)] == path.back()) --t;
  return t;
}

inline int makespan(const std::vector<Path>& plans) {
  int best = 0;
  for (const Path& p : plans) best = std::max(best, arrival_time(p));
  return best;
}

inline int sum_of_costs(const std::vector<Path>& plans) {
  int total = 0;
  for (const Path& p : plans) total += arrival_time(p);
  return total;
}

}  // namespace mapfdl
