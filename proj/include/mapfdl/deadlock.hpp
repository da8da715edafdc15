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

// Resource allocation graphs, the Banker's safety check and a grid-level
// deadlock observer that treats every cell as a single-instance resource.

#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapfdl/episode.hpp"
#include "mapfdl/error.hpp"
#include "mapfdl/grid.hpp"

namespace mapfdl {

using Matrix = std::vector<std::vector<int>>;

// Processes P_0..P_{n-1}, resource types R_0..R_{m-1}. A request edge points
// from a process to a resource type; an allocation edge points from one
// concrete instance of a type to the process holding it.
class ResourceAllocationGraph {
 public:
  struct RequestEdge {
    int process;
    int resource;
    int count = 1;  // instances wanted

    friend bool operator==(const RequestEdge&, const RequestEdge&) = default;
  };
  struct AllocationEdge {
    int resource;
    int instance;
    int process;

    friend bool operator==(const AllocationEdge&, const AllocationEdge&) = default;
  };

  ResourceAllocationGraph() = default;
  ResourceAllocationGraph(int processes, std::vector<int> instances)
      : processes_(processes), instances_(std::move(instances)), held_(instances_.size()) {
    if (processes_ < 0) throw InputError("negative process count");
    for (std::size_t r = 0; r < instances_.size(); ++r) {
      if (instances_[r] < 0) throw InputError("negative instance count");
      held_[r].assign(static_cast<std::size_t>(instances_[r]), -1);
    }
  }

  int processes() const { return processes_; }
  int resources() const { return static_cast<int>(instances_.size()); }
  const std::vector<int>& instances() const { return instances_; }
  const std::vector<RequestEdge>& requests() const { return requests_; }
  const std::vector<AllocationEdge>& allocations() const { return allocations_; }

  // Merges repeated requests of the same (process, resource) pair.
  void request(int process, int resource, int count = 1) {
    check_ids(process, resource);
    if (count <= 0) throw InputError("request count must be positive");
    for (RequestEdge& e : requests_) {
      if (e.process == process && e.resource == resource) {
        e.count += count;
        return;
      }
    }
    requests_.push_back({process, resource, count});
  }

  // Hands the lowest free instance of `resource` to `process`.
  int allocate(int resource, int process) {
    check_ids(process, resource);
    auto& slots = held_[static_cast<std::size_t>(resource)];
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (slots[k] < 0) {
        slots[k] = process;
        allocations_.push_back({resource, static_cast<int>(k), process});
        return static_cast<int>(k);
      }
    }
    throw CapacityError("resource " + std::to_string(resource) + " has no free instance");
  }

  Matrix allocation_matrix() const {
    Matrix c(static_cast<std::size_t>(processes_), std::vector<int>(instances_.size(), 0));
    for (const AllocationEdge& e : allocations_) ++c[static_cast<std::size_t>(e.process)][static_cast<std::size_t>(e.resource)];
    return c;
  }

  Matrix request_matrix() const {
    Matrix q(static_cast<std::size_t>(processes_), std::vector<int>(instances_.size(), 0));
    for (const RequestEdge& e : requests_) q[static_cast<std::size_t>(e.process)][static_cast<std::size_t>(e.resource)] += e.count;
    return q;
  }

  std::vector<int> available() const {
    std::vector<int> out = instances_;
    for (const AllocationEdge& e : allocations_) --out[static_cast<std::size_t>(e.resource)];
    return out;
  }

  // Node ids: processes 0..n-1, resource types n..n+m-1.
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::set<int>> adj(static_cast<std::size_t>(processes_ + resources()));
    for (const RequestEdge& e : requests_) adj[static_cast<std::size_t>(e.process)].insert(processes_ + e.resource);
    for (const AllocationEdge& e : allocations_) adj[static_cast<std::size_t>(processes_ + e.resource)].insert(e.process);
    std::vector<std::vector<int>> out;
    for (const auto& s : adj) out.emplace_back(s.begin(), s.end());
    return out;
  }

 private:
  void check_ids(int process, int resource) const {
    if (process < 0 || process >= processes_) throw InputError("unknown process " + std::to_string(process));
    if (resource < 0 || resource >= resources()) throw InputError("unknown resource " + std::to_string(resource));
  }

  int processes_ = 0;
  std::vector<int> instances_;
  std::vector<std::vector<int>> held_;  // per type, per instance: holder or -1
  std::vector<RequestEdge> requests_;
  std::vector<AllocationEdge> allocations_;
};

// One allocation edge per allocated unit of C, one request edge per nonzero
// entry of the request matrix (carrying the entry as its count).
inline ResourceAllocationGraph rag_from_matrices(const Matrix& allocation, const Matrix& request,
                                                 const std::vector<int>& instances) {
  const std::size_t n = allocation.size();
  if (request.size() != n) throw InputError("allocation and request matrices have different process counts");
  for (std::size_t p = 0; p < n; ++p) {
    if (allocation[p].size() != instances.size() || request[p].size() != instances.size()) {
      throw InputError("matrix row " + std::to_string(p) + " does not match the resource count");
    }
  }
  for (std::size_t r = 0; r < instances.size(); ++r) {
    int sum = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (allocation[p][r] < 0 || request[p][r] < 0) throw InputError("matrix entries must be non-negative");
      sum += allocation[p][r];
    }
    if (sum > instances[r]) {
      throw CapacityError("resource " + std::to_string(r) + " allocates " + std::to_string(sum) + " of " +
                          std::to_string(instances[r]) + " instances");
    }
  }
  ResourceAllocationGraph g(static_cast<int>(n), instances);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t r = 0; r < instances.size(); ++r) {
      for (int k = 0; k < allocation[p][r]; ++k) g.allocate(static_cast<int>(r), static_cast<int>(p));
      if (request[p][r] > 0) g.request(static_cast<int>(p), static_cast<int>(r), request[p][r]);
    }
  }
  return g;
}

struct RagNode {
  enum class Kind { kProcess, kResource };
  Kind kind;
  int id;

  friend bool operator==(const RagNode&, const RagNode&) = default;
};

struct RagCycle {
  std::vector<RagNode> nodes;  // closed: nodes.back() has an edge to nodes.front()
  // True when every resource on the cycle has a single instance, in which
  // case the cycle is a deadlock; otherwise it only signals a potential one.
  bool definite = false;

  std::vector<int> processes() const {
    std::vector<int> out;
    for (const RagNode& n : nodes)
      if (n.kind == RagNode::Kind::kProcess) out.push_back(n.id);
    return out;
  }
};

// Iterative DFS from the lowest node id; returns the first cycle closed.
inline std::optional<RagCycle> detect_cycle(const ResourceAllocationGraph& g) {
  const auto adj = g.adjacency();
  const int total = static_cast<int>(adj.size());
  std::vector<int> colour(static_cast<std::size_t>(total), 0);  // 0 white, 1 grey, 2 black
  std::vector<int> parent(static_cast<std::size_t>(total), -1);
  for (int root = 0; root < total; ++root) {
    if (colour[static_cast<std::size_t>(root)] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    colour[static_cast<std::size_t>(root)] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& out = adj[static_cast<std::size_t>(v)];
      if (next == out.size()) {
        colour[static_cast<std::size_t>(v)] = 2;
        stack.pop_back();
        continue;
      }
      const int w = out[next++];
      if (colour[static_cast<std::size_t>(w)] == 1) {
        std::vector<int> ids{v};
        for (int u = v; u != w;) {
          u = parent[static_cast<std::size_t>(u)];
          ids.push_back(u);
        }
        std::reverse(ids.begin(), ids.end());  // w ... v, then v -> w closes it
        RagCycle cycle;
        cycle.definite = true;
        for (int id : ids) {
          if (id < g.processes()) {
            cycle.nodes.push_back({RagNode::Kind::kProcess, id});
          } else {
            const int r = id - g.processes();
            cycle.nodes.push_back({RagNode::Kind::kResource, r});
            if (g.instances()[static_cast<std::size_t>(r)] > 1) cycle.definite = false;
          }
        }
        return cycle;
      }
      if (colour[static_cast<std::size_t>(w)] == 0) {
        colour[static_cast<std::size_t>(w)] = 1;
        parent[static_cast<std::size_t>(w)] = v;
        stack.push_back({w, 0});
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Banker's algorithm

struct BankersState {
  std::vector<int> available;
  Matrix max;
  Matrix allocation;

  int processes() const { return static_cast<int>(max.size()); }
  int resources() const { return static_cast<int>(available.size()); }

  Matrix need() const {
    Matrix out = max;
    for (std::size_t p = 0; p < out.size(); ++p)
      for (std::size_t r = 0; r < out[p].size(); ++r) out[p][r] -= allocation[p][r];
    return out;
  }

  // Allocated plus available, per resource type.
  std::vector<int> total() const {
    std::vector<int> out = available;
    for (const auto& row : allocation)
      for (std::size_t r = 0; r < row.size(); ++r) out[r] += row[r];
    return out;
  }

  void validate() const {
    const std::size_t m = available.size();
    if (allocation.size() != max.size()) throw InputError("max and allocation have different process counts");
    for (int a : available)
      if (a < 0) throw InputError("available must be non-negative");
    for (std::size_t p = 0; p < max.size(); ++p) {
      if (max[p].size() != m || allocation[p].size() != m) {
        throw InputError("row " + std::to_string(p) + " does not match the resource count");
      }
      for (std::size_t r = 0; r < m; ++r) {
        if (allocation[p][r] < 0) throw InputError("allocation must be non-negative");
        if (allocation[p][r] > max[p][r]) {
          throw InputError("process " + std::to_string(p) + " holds more of resource " + std::to_string(r) +
                           " than its maximum");
        }
      }
    }
  }

  friend bool operator==(const BankersState&, const BankersState&) = default;
};

struct SafetyResult {
  bool safe = false;
  std::vector<int> order;  // completion order; complete only when safe
};

// Repeatedly completes the lowest-id unfinished process whose need fits in
// the currently available vector and returns its allocation to the pool.
inline SafetyResult is_safe(const BankersState& s) {
  s.validate();
  const Matrix need = s.need();
  std::vector<int> current = s.available;
  std::vector<bool> completed(static_cast<std::size_t>(s.processes()), false);
  SafetyResult result;
  for (bool progress = true; progress;) {
    progress = false;
    for (int p = 0; p < s.processes(); ++p) {
      const auto pi = static_cast<std::size_t>(p);
      if (completed[pi]) continue;
      bool fits = true;
      for (int r = 0; r < s.resources() && fits; ++r)
        fits = need[pi][static_cast<std::size_t>(r)] <= current[static_cast<std::size_t>(r)];
      if (!fits) continue;
      for (int r = 0; r < s.resources(); ++r) current[static_cast<std::size_t>(r)] += s.allocation[pi][static_cast<std::size_t>(r)];
      completed[pi] = true;
      result.order.push_back(p);
      progress = true;
      break;
    }
  }
  result.safe = static_cast<int>(result.order.size()) == s.processes();
  if (!result.safe) result.order.clear();
  return result;
}

enum class GrantOutcome { kGranted, kDeniedUnsafe, kDeniedInvalid };

inline std::string to_string(GrantOutcome g) {
  switch (g) {
    case GrantOutcome::kGranted:
      return "granted";
    case GrantOutcome::kDeniedUnsafe:
      return "denied-unsafe";
    case GrantOutcome::kDeniedInvalid:
      return "denied-invalid";
  }
  return "?";
}

struct GrantResult {
  GrantOutcome outcome;
  BankersState state;  // the new state when granted, otherwise the input
};

inline GrantResult grant_request(const BankersState& s, int process, std::span<const int> request) {
  s.validate();
  if (process < 0 || process >= s.processes()) throw InputError("unknown process " + std::to_string(process));
  if (static_cast<int>(request.size()) != s.resources()) throw InputError("request length does not match resources");
  for (int v : request)
    if (v < 0) throw InputError("request entries must be non-negative");
  const Matrix need = s.need();
  const auto p = static_cast<std::size_t>(process);
  for (std::size_t r = 0; r < request.size(); ++r) {
    if (request[r] > need[p][r] || request[r] > s.available[r]) return {GrantOutcome::kDeniedInvalid, s};
  }
  BankersState next = s;
  for (std::size_t r = 0; r < request.size(); ++r) {
    next.available[r] -= request[r];
    next.allocation[p][r] += request[r];
  }
  if (!is_safe(next).safe) return {GrantOutcome::kDeniedUnsafe, s};
  return {GrantOutcome::kGranted, std::move(next)};
}

// {available:[...], max:[[...]], allocation:[[...]]}
inline BankersState bankers_from_json(const nlohmann::json& j) {
  try {
    BankersState s;
    s.available = j.at("available").get<std::vector<int>>();
    s.max = j.at("max").get<Matrix>();
    s.allocation = j.at("allocation").get<Matrix>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("bad Banker's state: ") + e.what());
  }
}

inline nlohmann::json bankers_to_json(const BankersState& s) {
  return {{"available", s.available}, {"max", s.max}, {"allocation", s.allocation}};
}

// ---------------------------------------------------------------------------
// Grid deadlocks

struct DeadlockReport {
  std::vector<int> cycle;  // agent cycle[k] wants the cell held by cycle[k+1]; the last wants the first's
  int timestep = 0;
};

// Each agent holds its current cell and requests the cell it intends to enter
// next; agents intending to stay request nothing. A request cycle is a
// deadlock (or, for a rotation, a cycle conflict).
inline std::optional<DeadlockReport> detect_episode_deadlock(const GridLayout& grid, const EpisodeState& state,
                                                             std::span<const Position> intents) {
  const int n = state.agents();
  if (static_cast<int>(intents.size()) != n) throw InputError("one intent per agent required");
  ResourceAllocationGraph rag(n, std::vector<int>(static_cast<std::size_t>(grid.size()), 1));
  for (int i = 0; i < n; ++i) rag.allocate(grid.index(state.positions[static_cast<std::size_t>(i)]), i);
  for (int i = 0; i < n; ++i) {
    const Position want = intents[static_cast<std::size_t>(i)];
    // Agents already on their goal are finished and take no part in a cycle.
    if (state.at_goal(i) || want == state.positions[static_cast<std::size_t>(i)] || !grid.is_free(want)) continue;
    rag.request(i, grid.index(want));
  }
  const auto cycle = detect_cycle(rag);
  if (!cycle) return std::nullopt;
  return DeadlockReport{cycle->processes(), state.t};
}

// Reports a wait cycle once the same set of agents has been caught in one for
// `window` consecutive observations. Transient swap attempts therefore do not
// count.
class DeadlockMonitor {
 public:
  explicit DeadlockMonitor(int window = 3) : window_(window) {
    if (window_ < 1) throw ParameterError("deadlock window must be >= 1");
  }

  int window() const { return window_; }

  std::optional<DeadlockReport> observe(const GridLayout& grid, const EpisodeState& state,
                                        std::span<const Position> intents) {
    auto report = detect_episode_deadlock(grid, state, intents);
    if (!report) {
      streak_ = 0;
      last_.clear();
      return std::nullopt;
    }
    std::vector<int> members = report->cycle;
    std::sort(members.begin(), members.end());
    streak_ = members == last_ ? streak_ + 1 : 1;
    last_ = std::move(members);
    if (streak_ >= window_) return report;
    return std::nullopt;
  }

 private:
  int window_;
  int streak_ = 0;
  std::vector<int> last_;
};

}  // namespace mapfdl
