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

// Multi-agent grid episode: reset, step, observations, rewards, termination.
//
// Per step every agent i receives
//
//   r_i = alpha * J_i + beta * K + gamma * C_i
//
// where J_i marks the first visit of its goal, K marks all agents standing on
// their goals at once (which also terminates the episode) and C_i marks
// involvement in a collision. Colliding agents stay where they are; the
// remaining agents move. An episode that reaches t_max without K = 1 is
// truncated.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapfdl/error.hpp"
#include "mapfdl/grid.hpp"
#include "mapfdl/layouts.hpp"

namespace mapfdl {

struct RewardWeights {
  double alpha = 0.5;   // first goal visit
  double beta = 1.0;    // everybody on their goal
  double gamma = -1.0;  // collision
};

enum class ObsMode { kCte, kLocal };

inline std::string to_string(ObsMode m) { return m == ObsMode::kCte ? "cte" : "local"; }

inline ObsMode obs_mode_from_string(std::string_view s) {
  if (s == "cte") return ObsMode::kCte;
  if (s == "local") return ObsMode::kLocal;
  throw ParameterError("unknown observation mode '" + std::string(s) + "'");
}

// Cell codes shared by both observation forms.
enum CellCode : std::uint8_t { kEmpty = 0, kWallOrOut = 1, kAgent = 2, kOwnGoal = 3, kOtherGoal = 4 };

struct EpisodeConfig {
  GridLayout grid;
  std::optional<TaskSet> tasks;  // unset: sampled from the reset seed
  int n_agents = 0;              // 0: size of `tasks`
  int t_max = 100;
  ObsMode obs_mode = ObsMode::kLocal;
  int sensor_range = 2;
  CollisionModel collision = CollisionModel::kStrict;
  bool action_mask = false;  // enforce: masked-out actions are executed as stay
  RewardWeights weights;

  int agent_count() const { return n_agents > 0 ? n_agents : (tasks ? static_cast<int>(tasks->size()) : 0); }

  void validate() const {
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (sensor_range < 1) throw ConfigError("sensor_range must be >= 1");
    if (!tasks && n_agents < 1) throw ConfigError("either tasks or n_agents must be given");
    if (tasks) {
      if (tasks->empty()) throw ConfigError("task set is empty");
      if (n_agents > 0 && n_agents != static_cast<int>(tasks->size())) {
        throw ConfigError("n_agents " + std::to_string(n_agents) + " does not match " +
                          std::to_string(tasks->size()) + " tasks");
      }
      const auto violations = validate_layout(grid, *tasks);
      if (!violations.empty()) throw ConfigError("invalid tasks: " + violations.front());
    }
  }
};

struct EpisodeState {
  int t = 0;
  std::vector<Position> positions;
  std::vector<Position> goals;
  std::vector<bool> reached;  // F_i: goal visited at least once
  std::vector<double> returns;
  bool terminated = false;
  bool truncated = false;

  int agents() const { return static_cast<int>(positions.size()); }
  bool finished() const { return terminated || truncated; }
  bool at_goal(int i) const { return positions[static_cast<std::size_t>(i)] == goals[static_cast<std::size_t>(i)]; }
  bool all_at_goal() const {
    for (int i = 0; i < agents(); ++i)
      if (!at_goal(i)) return false;
    return true;
  }
};

struct Observation {
  ObsMode mode = ObsMode::kLocal;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;  // row-major
  Position pos;                     // local: own position
  Position goal;                    // local: own goal
  std::vector<Position> positions;  // cte: all agent positions

  std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

// Full grid for a centralized controller. Every agent is 2 and every goal is
// 3 (the controller owns all agents, so each goal is some agent's own goal).
// Precedence on shared cells: agent > goal > empty.
inline Observation observe_cte(const GridLayout& grid, const EpisodeState& s) {
  Observation o;
  o.mode = ObsMode::kCte;
  o.rows = grid.rows();
  o.cols = grid.cols();
  o.cells.assign(static_cast<std::size_t>(grid.size()), kEmpty);
  for (int i = 0; i < grid.size(); ++i)
    if (grid.is_wall(grid.position(i))) o.cells[static_cast<std::size_t>(i)] = kWallOrOut;
  for (const Position& g : s.goals) o.cells[static_cast<std::size_t>(grid.index(g))] = kOwnGoal;
  for (const Position& p : s.positions) o.cells[static_cast<std::size_t>(grid.index(p))] = kAgent;
  o.positions = s.positions;
  return o;
}

// (2R+1)^2 window centred on `agent`. The agent does not see itself: its own
// cell shows what lies beneath (3 on its goal, 4 on a foreign goal, else 0).
// Precedence: other agent (2) > own goal (3) > other goal (4) > empty (0).
inline Observation observe_local(const GridLayout& grid, const EpisodeState& s, int agent, int range) {
  if (agent < 0 || agent >= s.agents()) throw InputError("unknown agent " + std::to_string(agent));
  if (range < 1) throw ParameterError("sensor range must be >= 1");
  const int side = 2 * range + 1;
  const Position me = s.positions[static_cast<std::size_t>(agent)];
  const Position my_goal = s.goals[static_cast<std::size_t>(agent)];
  Observation o;
  o.mode = ObsMode::kLocal;
  o.rows = side;
  o.cols = side;
  o.cells.assign(static_cast<std::size_t>(side * side), kEmpty);
  o.pos = me;
  o.goal = my_goal;
  for (int dr = 0; dr < side; ++dr) {
    for (int dc = 0; dc < side; ++dc) {
      const Position cell{me.x - range + dr, me.y - range + dc};
      std::uint8_t code = kEmpty;
      if (!grid.is_free(cell)) {
        code = kWallOrOut;
      } else {
        bool other_agent = false, other_goal = false;
        for (int j = 0; j < s.agents(); ++j) {
          if (j == agent) continue;
          if (s.positions[static_cast<std::size_t>(j)] == cell) other_agent = true;
          if (s.goals[static_cast<std::size_t>(j)] == cell) other_goal = true;
        }
        if (other_agent) {
          code = kAgent;
        } else if (cell == my_goal) {
          code = kOwnGoal;
        } else if (other_goal) {
          code = kOtherGoal;
        }
      }
      o.cells[static_cast<std::size_t>(dr * side + dc)] = code;
    }
  }
  return o;
}

// allowed[a] for each action code; stay is always allowed.
using ActionMask = std::array<bool, kNumActions>;

inline ActionMask action_mask(const GridLayout& grid, const EpisodeState& s, int agent) {
  if (agent < 0 || agent >= s.agents()) throw InputError("unknown agent " + std::to_string(agent));
  ActionMask mask{};
  const Position me = s.positions[static_cast<std::size_t>(agent)];
  for (Action a : kAllActions) {
    if (a == Action::kStay) {
      mask[0] = true;
      continue;
    }
    const Position q = shifted(me, a);
    bool ok = grid.is_free(q);
    for (int j = 0; ok && j < s.agents(); ++j)
      if (j != agent && s.positions[static_cast<std::size_t>(j)] == q) ok = false;
    mask[static_cast<std::size_t>(action_code(a))] = ok;
  }
  return mask;
}

struct StepInfo {
  std::vector<int> collisions;  // agents with C_i = 1
  std::vector<int> reached;     // agents with J_i = 1
  std::vector<int> masked;      // agents whose action was masked to stay
  std::vector<CollisionEvent> events;
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

struct TraceRecord {
  int t = 0;  // timestep reached by this step
  JointAction actions;
  std::vector<Position> positions;
  std::vector<double> rewards;
  std::vector<bool> flags;  // F_i after the step
  std::vector<int> collisions;
  bool terminated = false;
  bool truncated = false;
};

struct Trace {
  std::vector<Position> initial_positions;
  std::vector<Position> goals;
  std::vector<TraceRecord> steps;

  bool terminated() const { return !steps.empty() && steps.back().terminated; }
  bool truncated() const { return !steps.empty() && steps.back().truncated; }
  int end_time() const { return steps.empty() ? 0 : steps.back().t; }
};

struct EpisodeReturns {
  std::vector<double> per_agent;
  double total = 0.0;
};

// Per-agent sums of all step rewards and their sum over agents.
inline EpisodeReturns episode_reward(const Trace& trace) {
  EpisodeReturns out;
  out.per_agent.assign(trace.goals.size(), 0.0);
  for (const TraceRecord& rec : trace.steps)
    for (std::size_t i = 0; i < rec.rewards.size() && i < out.per_agent.size(); ++i) out.per_agent[i] += rec.rewards[i];
  for (double r : out.per_agent) out.total += r;
  return out;
}

inline nlohmann::json position_json(Position p) { return nlohmann::json::array({p.x, p.y}); }

inline nlohmann::json trace_record_json(const TraceRecord& rec) {
  nlohmann::json actions = nlohmann::json::array(), positions = nlohmann::json::array(),
                 flags = nlohmann::json::array();
  for (Action a : rec.actions) actions.push_back(action_code(a));
  for (const Position& p : rec.positions) positions.push_back(position_json(p));
  for (bool f : rec.flags) flags.push_back(f ? 1 : 0);
  return {{"t", rec.t},          {"actions", actions},       {"positions", positions},
          {"rewards", rec.rewards}, {"flags", flags},         {"collisions", rec.collisions},
          {"terminated", rec.terminated}, {"truncated", rec.truncated}};
}

// One JSON object per line.
inline void write_trace_jsonl(std::ostream& os, const Trace& trace) {
  for (const TraceRecord& rec : trace.steps) os << trace_record_json(rec).dump() << '\n';
}

class Episode {
 public:
  explicit Episode(EpisodeConfig config) : config_(std::move(config)) { config_.validate(); }

  const EpisodeConfig& config() const { return config_; }
  const GridLayout& grid() const { return config_.grid; }
  const EpisodeState& state() const { return state_; }
  const Trace& trace() const { return trace_; }

  std::vector<Observation> reset(std::uint64_t seed) {
    rng_.seed(seed);
    TaskSet tasks = config_.tasks ? *config_.tasks : sample_tasks(config_.grid, config_.agent_count(), rng_);
    state_ = EpisodeState{};
    for (const Task& task : tasks) {
      state_.positions.push_back(task.start);
      state_.goals.push_back(task.goal);
    }
    const std::size_t n = tasks.size();
    state_.reached.assign(n, false);
    state_.returns.assign(n, 0.0);
    trace_ = Trace{state_.positions, state_.goals, {}};
    started_ = true;
    return observe_all();
  }

  StepResult step(const JointAction& actions) {
    if (!started_) throw StateError("episode not reset");
    if (state_.finished()) throw StateError("episode finished");
    const int n = state_.agents();
    if (static_cast<int>(actions.size()) < n) {
      throw InputError("missing action for agent " + std::to_string(actions.size()));
    }
    if (static_cast<int>(actions.size()) > n) throw InputError("more actions than agents");

    StepResult result;
    JointAction executed = actions;
    if (config_.action_mask) {
      for (int i = 0; i < n; ++i) {
        const ActionMask mask = action_mask(config_.grid, state_, i);
        if (!mask[static_cast<std::size_t>(action_code(executed[static_cast<std::size_t>(i)]))]) {
          executed[static_cast<std::size_t>(i)] = Action::kStay;
          result.info.masked.push_back(i);
        }
      }
    }

    const std::vector<Position>& current = state_.positions;
    std::vector<Position> proposed(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      proposed[static_cast<std::size_t>(i)] =
          apply_action(current[static_cast<std::size_t>(i)], executed[static_cast<std::size_t>(i)], config_.grid)
              .position;
    }
    CollisionResult collisions = detect_collisions(current, proposed, config_.collision);

    std::vector<Position> next = proposed;
    for (int i = 0; i < n; ++i)
      if (collisions.flagged[static_cast<std::size_t>(i)]) next[static_cast<std::size_t>(i)] = current[static_cast<std::size_t>(i)];
    // A cancelled agent still occupies its cell; anyone about to enter it is
    // held back as well (only reachable under the standard model).
    for (bool changed = true; changed;) {
      changed = false;
      for (int i = 0; i < n; ++i) {
        if (next[static_cast<std::size_t>(i)] == current[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < n; ++j) {
          if (j != i && next[static_cast<std::size_t>(j)] == current[static_cast<std::size_t>(j)] &&
              next[static_cast<std::size_t>(i)] == current[static_cast<std::size_t>(j)]) {
            next[static_cast<std::size_t>(i)] = current[static_cast<std::size_t>(i)];
            changed = true;
            break;
          }
        }
      }
    }
    state_.positions = next;
    state_.t += 1;

    const bool all_home = state_.all_at_goal();
    result.rewards.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const bool first_visit = !state_.reached[k] && state_.at_goal(i);
      if (state_.at_goal(i)) state_.reached[k] = true;
      double r = 0.0;
      if (first_visit) {
        r += config_.weights.alpha;
        result.info.reached.push_back(i);
      }
      if (all_home) r += config_.weights.beta;
      if (collisions.flagged[k]) {
        r += config_.weights.gamma;
        result.info.collisions.push_back(i);
      }
      result.rewards[k] = r;
      state_.returns[k] += r;
    }
    state_.terminated = all_home;
    state_.truncated = !all_home && state_.t >= config_.t_max;
    result.terminated = state_.terminated;
    result.truncated = state_.truncated;
    result.info.events = std::move(collisions.events);
    result.observations = observe_all();

    trace_.steps.push_back({state_.t, actions, state_.positions, result.rewards, state_.reached,
                            result.info.collisions, state_.terminated, state_.truncated});
    return result;
  }

  std::vector<Observation> observe_all() const {
    std::vector<Observation> out;
    if (config_.obs_mode == ObsMode::kCte) {
      out.push_back(observe_cte(config_.grid, state_));
    } else {
      for (int i = 0; i < state_.agents(); ++i) out.push_back(observe_local(config_.grid, state_, i, config_.sensor_range));
    }
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  EpisodeConfig config_;
  EpisodeState state_;
  Trace trace_;
  std::mt19937_64 rng_;
  bool started_ = false;
};

}  // namespace mapfdl
