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

// Grid geometry, the five-action move model and collision detection.
//
// Coordinates: x is the row (grows downward), y is the column (grows to the
// right). "Up" therefore maps (x, y) to (x - 1, y).

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mapfdl/error.hpp"

namespace mapfdl {

struct Position {
  int x = 0;  // row
  int y = 0;  // column

  friend constexpr auto operator<=>(const Position&, const Position&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Position& p) {
  return os << '(' << p.x << ',' << p.y << ')';
}

struct PositionHash {
  std::size_t operator()(const Position& p) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) |
                                      static_cast<std::uint32_t>(p.y));
  }
};

inline int manhattan(Position a, Position b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

enum class Action : std::uint8_t { kStay = 0, kUp = 1, kRight = 2, kDown = 3, kLeft = 4 };

inline constexpr int kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kAllActions = {Action::kStay, Action::kUp, Action::kRight,
                                                                Action::kDown, Action::kLeft};

inline constexpr int action_code(Action a) { return static_cast<int>(a); }

inline Action action_from_code(int code) {
  if (code < 0 || code >= kNumActions) {
    throw DecodeError("action code " + std::to_string(code) + " outside 0..4");
  }
  return static_cast<Action>(code);
}

inline constexpr Position action_delta(Action a) {
  switch (a) {
    case Action::kUp:
      return {-1, 0};
    case Action::kRight:
      return {0, 1};
    case Action::kDown:
      return {1, 0};
    case Action::kLeft:
      return {0, -1};
    case Action::kStay:
      break;
  }
  return {0, 0};
}

inline constexpr Action opposite(Action a) {
  switch (a) {
    case Action::kUp:
      return Action::kDown;
    case Action::kDown:
      return Action::kUp;
    case Action::kLeft:
      return Action::kRight;
    case Action::kRight:
      return Action::kLeft;
    case Action::kStay:
      break;
  }
  return Action::kStay;
}

inline constexpr Position shifted(Position p, Action a) {
  const Position d = action_delta(a);
  return {p.x + d.x, p.y + d.y};
}

// Action that moves `from` to the 4-neighbor (or identical cell) `to`.
inline Action action_between(Position from, Position to) {
  for (Action a : kAllActions) {
    if (shifted(from, a) == to) return a;
  }
  throw InputError("cells are not adjacent");
}

// One joint decision: element i is the action of agent i.
using JointAction = std::vector<Action>;

// Immutable occupancy grid.
class GridLayout {
 public:
  GridLayout() = default;

  GridLayout(int rows, int cols, std::vector<bool> walls, std::string name = {})
      : rows_(rows), cols_(cols), walls_(std::move(walls)), name_(std::move(name)) {
    if (rows_ < 1 || cols_ < 1) throw ParameterError("grid needs at least one row and one column");
    if (walls_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_)) {
      throw ParameterError("wall mask size does not match rows*cols");
    }
    std::size_t free = 0;
    for (bool w : walls_) free += w ? 0 : 1;
    if (free < 2) throw ParameterError("grid needs at least two free cells");
  }

  // Rows of '.' (free) and '#' (wall). Trailing whitespace is ignored.
  static GridLayout from_lines(const std::vector<std::string>& lines, std::string name = {}) {
    std::vector<std::string> rows;
    for (std::string line : lines) {
      while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t')) line.pop_back();
      rows.push_back(std::move(line));
    }
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
    if (rows.empty()) throw ParameterError("layout text is empty");
    const std::size_t cols = rows.front().size();
    std::vector<bool> walls;
    walls.reserve(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        throw ParameterError("layout row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                             " cells, expected " + std::to_string(cols));
      }
      for (char c : rows[r]) {
        if (c == '.') {
          walls.push_back(false);
        } else if (c == '#') {
          walls.push_back(true);
        } else {
          throw ParameterError(std::string("unexpected layout character '") + c + "' in row " + std::to_string(r));
        }
      }
    }
    return GridLayout(static_cast<int>(rows.size()), static_cast<int>(cols), std::move(walls), std::move(name));
  }

  static GridLayout from_text(std::string_view text, std::string name = {}) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return from_lines(lines, std::move(name));
  }

  std::string to_text() const {
    std::string out;
    out.reserve(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_ + 1));
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) out.push_back(is_wall({r, c}) ? '#' : '.');
      out.push_back('\n');
    }
    return out;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  const std::string& name() const { return name_; }

  GridLayout renamed(std::string name) const {
    GridLayout copy = *this;
    copy.name_ = std::move(name);
    return copy;
  }

  bool in_bounds(Position p) const { return p.x >= 0 && p.x < rows_ && p.y >= 0 && p.y < cols_; }
  bool is_wall(Position p) const { return walls_[static_cast<std::size_t>(index(p))]; }
  bool is_free(Position p) const { return in_bounds(p) && !is_wall(p); }

  int index(Position p) const { return p.x * cols_ + p.y; }
  Position position(int idx) const { return {idx / cols_, idx % cols_}; }

  std::vector<Position> free_cells() const {
    std::vector<Position> out;
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c)
        if (!is_wall({r, c})) out.push_back({r, c});
    return out;
  }

  // Free 4-neighbors of p (no stay).
  std::vector<Position> neighbors(Position p) const {
    std::vector<Position> out;
    for (Action a : {Action::kUp, Action::kRight, Action::kDown, Action::kLeft}) {
      const Position q = shifted(p, a);
      if (is_free(q)) out.push_back(q);
    }
    return out;
  }

  friend bool operator==(const GridLayout& a, const GridLayout& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.walls_ == b.walls_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<bool> walls_;
  std::string name_;
};

struct MoveOutcome {
  enum class Kind { kMovedTo, kBlockedStays };
  Kind kind = Kind::kMovedTo;
  Position position;

  bool blocked() const { return kind == Kind::kBlockedStays; }
  friend bool operator==(const MoveOutcome&, const MoveOutcome&) = default;
};

// Moves into walls or off the grid leave the agent where it is.
inline MoveOutcome apply_action(Position pos, Action a, const GridLayout& grid) {
  const Position target = shifted(pos, a);
  if (!grid.is_free(target)) return {MoveOutcome::Kind::kBlockedStays, pos};
  return {MoveOutcome::Kind::kMovedTo, target};
}

// strict: entering any currently occupied cell (including one being
// vacated) or sharing a target. standard: vertex + swap only.
enum class CollisionModel { kStrict, kStandard };

inline std::string to_string(CollisionModel m) { return m == CollisionModel::kStrict ? "strict" : "standard"; }

inline CollisionModel collision_model_from_string(std::string_view s) {
  if (s == "strict") return CollisionModel::kStrict;
  if (s == "standard") return CollisionModel::kStandard;
  throw ParameterError("unknown collision model '" + std::string(s) + "'");
}

struct CollisionEvent {
  enum class Kind {
    kSameTarget,     // proposed_i == proposed_j
    kSwap,           // proposed_i == current_j && proposed_j == current_i
    kEnterOccupied,  // proposed_i == current_j (strict only, not a swap); j is `other`
  };
  Kind kind;
  int agent;
  int other;

  friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};

struct CollisionResult {
  std::vector<bool> flagged;
  std::vector<CollisionEvent> events;

  bool any() const {
    for (bool f : flagged)
      if (f) return true;
    return false;
  }
};

inline CollisionResult detect_collisions(std::span<const Position> current, std::span<const Position> proposed,
                                         CollisionModel model) {
  if (current.size() != proposed.size()) {
    throw InputError("current and proposed positions cover different agent sets");
  }
  const int n = static_cast<int>(current.size());
  CollisionResult result;
  result.flagged.assign(static_cast<std::size_t>(n), false);
  auto flag = [&](int i) { result.flagged[static_cast<std::size_t>(i)] = true; };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Position ci = current[static_cast<std::size_t>(i)], cj = current[static_cast<std::size_t>(j)];
      const Position pi = proposed[static_cast<std::size_t>(i)], pj = proposed[static_cast<std::size_t>(j)];
      if (pi == pj) {
        flag(i);
        flag(j);
        result.events.push_back({CollisionEvent::Kind::kSameTarget, i, j});
      }
      const bool swap = pi == cj && pj == ci && ci != cj;
      if (swap) {
        flag(i);
        flag(j);
        result.events.push_back({CollisionEvent::Kind::kSwap, i, j});
        continue;
      }
      if (model == CollisionModel::kStrict) {
        if (pi == cj && pi != pj) {
          flag(i);
          result.events.push_back({CollisionEvent::Kind::kEnterOccupied, i, j});
        }
        if (pj == ci && pi != pj) {
          flag(j);
          result.events.push_back({CollisionEvent::Kind::kEnterOccupied, j, i});
        }
      }
    }
  }
  return result;
}

}  // namespace mapfdl
