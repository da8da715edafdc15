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

// Reference-model layouts and seeded task sampling.
//
// Families:
//   rm1.1  corridor with one short pocket aisle for evasive maneuvers
//   rm1.2  single-file corridor between two open end zones
//   rm1.3  two rooms joined by one narrow passage
//   rm1.4  four-way intersection
//   rm2.1  warehouse block layout (parallel aisles + cross rows)
//   rm2.2  fishbone warehouse (staircase diagonals off a central aisle)
//   rm3.1  production loop roads with dead-end goal aisles
//
// rm1.x layouts ship fixed default tasks; rm2.x and rm3.1 expect sampling.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapfdl/error.hpp"
#include "mapfdl/grid.hpp"

namespace mapfdl {

struct Task {
  Position start;
  Position goal;

  friend bool operator==(const Task&, const Task&) = default;
};

using TaskSet = std::vector<Task>;

enum class Family { kRm1_1, kRm1_2, kRm1_3, kRm1_4, kRm2_1, kRm2_2, kRm3_1 };

inline constexpr std::array<Family, 7> kAllFamilies = {Family::kRm1_1, Family::kRm1_2, Family::kRm1_3,
                                                       Family::kRm1_4, Family::kRm2_1, Family::kRm2_2,
                                                       Family::kRm3_1};

inline std::string to_string(Family f) {
  switch (f) {
    case Family::kRm1_1:
      return "rm1.1";
    case Family::kRm1_2:
      return "rm1.2";
    case Family::kRm1_3:
      return "rm1.3";
    case Family::kRm1_4:
      return "rm1.4";
    case Family::kRm2_1:
      return "rm2.1";
    case Family::kRm2_2:
      return "rm2.2";
    case Family::kRm3_1:
      return "rm3.1";
  }
  return "?";
}

// Accepts "rm2.1", "rm2_1", "RM2.1" and "2.1".
inline std::optional<Family> parse_family(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(c == '_' ? '.' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s.rfind("rm", 0) != 0) s = "rm" + s;
  for (Family f : kAllFamilies)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

inline std::vector<std::string> family_variants(Family f) {
  switch (f) {
    case Family::kRm1_1:
      return {"basic", "unfavorable", "alt-aisle"};
    case Family::kRm1_2:
      return {"basic", "three-agents", "long"};
    case Family::kRm1_3:
      return {"basic", "three-agents", "large"};
    case Family::kRm1_4:
      return {"basic", "turns", "three-agents"};
    case Family::kRm2_1:
      return {"block", "dead-ends"};
    case Family::kRm2_2:
      return {"fishbone"};
    case Family::kRm3_1:
      return {"basic", "short-goal-aisles"};
  }
  return {};
}

struct ReferenceModelId {
  Family family = Family::kRm1_1;
  std::string variant;  // empty selects the family's first variant

  std::string resolved_variant() const { return variant.empty() ? family_variants(family).front() : variant; }
};

// Unset fields take the variant's default.
struct VariantParams {
  std::optional<int> corridor_length;   // rm1.2, >= 3
  std::optional<int> passage_position;  // rm1.3, row of the passage
  std::optional<int> path_length;       // rm1.4, arm length, >= 2
  std::optional<int> aisle_count;       // rm2.1, shelf blocks per band, 1..8
  std::optional<int> aisle_length;      // rm2.1, shelf height, 1..6
  std::optional<int> n_agents;          // rm1.x: prefix of the default tasks
};

struct BuiltLayout {
  GridLayout grid;
  std::optional<TaskSet> default_tasks;
  ReferenceModelId id;
  VariantParams params;
};

namespace detail {

inline std::vector<std::string> blank(int rows, int cols, char fill) {
  return std::vector<std::string>(static_cast<std::size_t>(rows), std::string(static_cast<std::size_t>(cols), fill));
}

inline void carve(std::vector<std::string>& g, int r, int c) { g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = '.'; }
inline void wall(std::vector<std::string>& g, int r, int c) { g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = '#'; }

inline int param_or(const std::optional<int>& v, int fallback) { return v.value_or(fallback); }

inline void check_range(const char* what, int v, int lo, int hi) {
  if (v < lo || v > hi) {
    throw ParameterError(std::string(what) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  }
}

// Pocket corridor. The basic variant is calibrated so the optimal two-agent
// makespan of its default tasks is exactly 9.
inline BuiltLayout rm1_1(const std::string& variant) {
  BuiltLayout b;
  if (variant == "alt-aisle") {
    b.grid = GridLayout::from_lines({"########", "........", "####.###"});
    b.default_tasks = TaskSet{{{1, 0}, {1, 7}}, {{1, 7}, {1, 0}}};
  } else {
    b.grid = GridLayout::from_lines({"###.####", "........", "########"});
    if (variant == "basic") {
      b.default_tasks = TaskSet{{{1, 0}, {1, 7}}, {{1, 7}, {1, 0}}};
    } else {
      // Start and goal both deep on the far side: both agents have to give way.
      b.default_tasks = TaskSet{{{1, 1}, {1, 6}}, {{1, 5}, {1, 1}}};
    }
  }
  return b;
}

inline BuiltLayout rm1_2(const std::string& variant, const VariantParams& p) {
  const int length = param_or(p.corridor_length, variant == "long" ? 9 : 5);
  check_range("corridor_length", length, 3, 64);
  const int cols = length + 4;
  auto g = blank(3, cols, '.');
  for (int c = 2; c < 2 + length; ++c) {
    wall(g, 0, c);
    wall(g, 2, c);
  }
  BuiltLayout b;
  b.grid = GridLayout::from_lines(g);
  const int last = cols - 1;
  if (variant == "three-agents") {
    b.default_tasks = TaskSet{{{1, 0}, {1, last}}, {{1, last}, {0, 0}}, {{2, last}, {2, 0}}};
  } else {
    b.default_tasks = TaskSet{{{1, 0}, {1, last}}, {{1, last}, {1, 0}}};
  }
  return b;
}

inline BuiltLayout rm1_3(const std::string& variant, const VariantParams& p) {
  const bool large = variant == "large";
  const int rows = large ? 7 : 5;
  const int cols = large ? 9 : 7;
  const int wall_col = cols / 2;
  const int passage = param_or(p.passage_position, large ? 1 : rows / 2);
  check_range("passage_position", passage, 0, rows - 1);
  auto g = blank(rows, cols, '.');
  for (int r = 0; r < rows; ++r)
    if (r != passage) wall(g, r, wall_col);
  BuiltLayout b;
  b.grid = GridLayout::from_lines(g);
  const int mid = rows / 2;
  if (variant == "three-agents") {
    b.default_tasks = TaskSet{{{mid, 0}, {mid, cols - 1}}, {{mid, cols - 1}, {mid, 0}}, {{0, 0}, {rows - 1, cols - 1}}};
  } else {
    b.default_tasks = TaskSet{{{mid, 0}, {mid, cols - 1}}, {{mid, cols - 1}, {mid, 0}}};
  }
  return b;
}

inline BuiltLayout rm1_4(const std::string& variant, const VariantParams& p) {
  const int arm = param_or(p.path_length, 3);
  check_range("path_length", arm, 2, 32);
  const int size = 2 * arm + 1;
  auto g = blank(size, size, '#');
  for (int i = 0; i < size; ++i) {
    carve(g, arm, i);
    carve(g, i, arm);
  }
  BuiltLayout b;
  b.grid = GridLayout::from_lines(g);
  const Position north{0, arm}, south{size - 1, arm}, west{arm, 0}, east{arm, size - 1};
  if (variant == "turns") {
    // Every agent turns right from its own heading.
    b.default_tasks = TaskSet{{north, west}, {east, north}, {south, east}, {west, south}};
  } else if (variant == "three-agents") {
    b.default_tasks = TaskSet{{north, south}, {south, east}, {west, north}};
  } else {
    b.default_tasks = TaskSet{{north, south}, {south, north}, {west, east}, {east, west}};
  }
  return b;
}

// Bands of 2-wide shelf blocks separated by 1-wide aisles, with cross rows
// above, between and below the bands.
inline std::vector<std::string> rm2_1_block(int blocks, int shelf) {
  const int cols = 1 + 3 * blocks;
  const int rows = 1 + 2 * (shelf + 1);
  auto g = blank(rows, cols, '.');
  for (int band = 0; band < 2; ++band) {
    const int top = 1 + band * (shelf + 1);
    for (int r = top; r < top + shelf; ++r)
      for (int k = 0; k < blocks; ++k) {
        wall(g, r, 1 + 3 * k);
        wall(g, r, 2 + 3 * k);
      }
  }
  return g;
}

inline BuiltLayout rm2_1(const std::string& variant, const VariantParams& p) {
  const int blocks = param_or(p.aisle_count, 4);
  const int shelf = param_or(p.aisle_length, 3);
  check_range("aisle_count", blocks, 1, 8);
  check_range("aisle_length", shelf, 1, 6);
  auto g = rm2_1_block(blocks, shelf);
  if (variant == "dead-ends") {
    if (shelf < 2) throw ParameterError("dead-ends variant needs aisle_length >= 2");
    // Close one end of every inner aisle, alternating which side, so each
    // aisle becomes a dead end reachable from exactly one cross row.
    const int middle = shelf + 1;
    for (int k = 1; k < blocks; ++k) {
      const int col = 3 * k;
      if (k % 2 == 1) {
        wall(g, middle - 1, col);  // top band: open only to the top row
        wall(g, middle + 1, col);  // bottom band: open only to the bottom row
      } else {
        wall(g, 1, col);                 // top band: open only to the middle row
        wall(g, 2 * middle - 1, col);    // bottom band: open only to the middle row
      }
    }
  }
  BuiltLayout b;
  b.grid = GridLayout::from_lines(g);
  return b;
}

// Perimeter ring, central vertical aisle, bottom cross aisle and two
// mirrored pairs of staircase diagonals.
inline BuiltLayout rm2_2() {
  const int rows = 9, cols = 13, centre = cols / 2;
  auto g = blank(rows, cols, '#');
  for (int c = 0; c < cols; ++c) {
    carve(g, 0, c);
    carve(g, rows - 1, c);
  }
  for (int r = 0; r < rows; ++r) {
    carve(g, r, 0);
    carve(g, r, cols - 1);
    carve(g, r, centre);
  }
  for (int start_row : {6, 3}) {
    int r = start_row, c = centre - 1;
    carve(g, r, c);
    carve(g, r, cols - 1 - c);
    while (c > 1 && r > 0) {
      --r;
      carve(g, r, c);
      carve(g, r, cols - 1 - c);
      --c;
      carve(g, r, c);
      carve(g, r, cols - 1 - c);
    }
  }
  BuiltLayout b;
  b.grid = GridLayout::from_lines(g);
  return b;
}

inline BuiltLayout rm3_1(const std::string& variant) {
  const int rows = 10, cols = 14;
  auto g = blank(rows, cols, '#');
  for (int c = 0; c < cols; ++c) {
    carve(g, 0, c);  // two-lane top road
    carve(g, 1, c);
    carve(g, 5, c);  // one-lane middle road
    carve(g, 9, c);  // one-lane bottom road
  }
  for (int r = 0; r < rows; ++r) {
    carve(g, r, 0);
    carve(g, r, cols - 1);
    carve(g, r, 6);  // two-lane central road
    carve(g, r, 7);
  }
  if (variant == "short-goal-aisles") {
    for (int r : {3, 7})
      for (int c : {1, 5, 8, 12}) carve(g, r, c);
  } else {
    // Long dead-end goal aisles off the central road.
    for (int r : {3, 7})
      for (int c = 2; c <= 5; ++c) {
        carve(g, r, c);
        carve(g, r, cols - 1 - c);
      }
  }
  BuiltLayout b;
  b.grid = GridLayout::from_lines(g);
  return b;
}

}  // namespace detail

inline BuiltLayout build_layout(const ReferenceModelId& id, const VariantParams& params = {}) {
  const std::string variant = id.resolved_variant();
  const auto variants = family_variants(id.family);
  if (std::find(variants.begin(), variants.end(), variant) == variants.end()) {
    throw ParameterError("unknown variant '" + variant + "' for " + to_string(id.family));
  }
  BuiltLayout b;
  switch (id.family) {
    case Family::kRm1_1:
      b = detail::rm1_1(variant);
      break;
    case Family::kRm1_2:
      b = detail::rm1_2(variant, params);
      break;
    case Family::kRm1_3:
      b = detail::rm1_3(variant, params);
      break;
    case Family::kRm1_4:
      b = detail::rm1_4(variant, params);
      break;
    case Family::kRm2_1:
      b = detail::rm2_1(variant, params);
      break;
    case Family::kRm2_2:
      b = detail::rm2_2();
      break;
    case Family::kRm3_1:
      b = detail::rm3_1(variant);
      break;
  }
  const std::string name = to_string(id.family) + "-" + variant;
  b.grid = b.grid.renamed(name);
  b.id = {id.family, variant};
  b.params = params;
  if (params.n_agents) {
    const int n = *params.n_agents;
    if (n < 1) throw ParameterError("n_agents must be >= 1");
    if (b.default_tasks) {
      if (n > static_cast<int>(b.default_tasks->size())) {
        throw ParameterError(to_string(id.family) + " " + variant + " defines only " +
                             std::to_string(b.default_tasks->size()) + " default tasks");
      }
      b.default_tasks->resize(static_cast<std::size_t>(n));
    }
  }
  return b;
}

// Connected-component label per cell index; walls get -1.
inline std::vector<int> connected_components(const GridLayout& grid) {
  std::vector<int> label(static_cast<std::size_t>(grid.size()), -1);
  int next = 0;
  for (const Position& seed : grid.free_cells()) {
    if (label[static_cast<std::size_t>(grid.index(seed))] >= 0) continue;
    std::deque<Position> queue{seed};
    label[static_cast<std::size_t>(grid.index(seed))] = next;
    while (!queue.empty()) {
      const Position p = queue.front();
      queue.pop_front();
      for (const Position& q : grid.neighbors(p)) {
        auto& l = label[static_cast<std::size_t>(grid.index(q))];
        if (l < 0) {
          l = next;
          queue.push_back(q);
        }
      }
    }
    ++next;
  }
  return label;
}

// Empty result means the task set is valid on this grid.
inline std::vector<std::string> validate_layout(const GridLayout& grid, const TaskSet& tasks) {
  std::vector<std::string> violations;
  std::set<Position> starts, goals;
  const auto label = connected_components(grid);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    const std::string who = "agent " + std::to_string(i);
    bool cells_ok = true;
    if (!grid.is_free(t.start)) {
      violations.push_back(who + ": start is not a free cell");
      cells_ok = false;
    }
    if (!grid.is_free(t.goal)) {
      violations.push_back(who + ": goal is not a free cell");
      cells_ok = false;
    }
    if (!starts.insert(t.start).second) violations.push_back(who + ": start shared with another agent");
    if (!goals.insert(t.goal).second) violations.push_back(who + ": goal shared with another agent");
    if (t.start == t.goal) violations.push_back(who + ": start equals goal");
    if (cells_ok && label[static_cast<std::size_t>(grid.index(t.start))] !=
                        label[static_cast<std::size_t>(grid.index(t.goal))]) {
      violations.push_back(who + ": goal unreachable from start");
    }
  }
  return violations;
}

inline constexpr int kMaxTaskResamples = 10000;

// Starts, then goals, drawn uniformly without replacement; whole draws
// violating the task-set invariants are rejected.
template <typename Rng>
TaskSet sample_tasks(const GridLayout& grid, int n, Rng& rng) {
  if (n < 1) throw ParameterError("need at least one agent");
  std::vector<Position> free = grid.free_cells();
  if (static_cast<int>(free.size()) < 2 * n) {
    throw CapacityError(std::to_string(n) + " agents need " + std::to_string(2 * n) + " free cells, layout has " +
                        std::to_string(free.size()));
  }
  const auto label = connected_components(grid);
  std::vector<Position> starts = free, goals = free;
  for (int attempt = 0; attempt < kMaxTaskResamples; ++attempt) {
    std::shuffle(starts.begin(), starts.end(), rng);
    std::shuffle(goals.begin(), goals.end(), rng);
    TaskSet tasks;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      const Task t{starts[static_cast<std::size_t>(i)], goals[static_cast<std::size_t>(i)]};
      ok = t.start != t.goal && label[static_cast<std::size_t>(grid.index(t.start))] ==
                                    label[static_cast<std::size_t>(grid.index(t.goal))];
      tasks.push_back(t);
    }
    if (ok) return tasks;
  }
  throw InfeasibleError("no valid task set after " + std::to_string(kMaxTaskResamples) + " draws");
}

inline TaskSet sample_tasks(const GridLayout& grid, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_tasks(grid, n, rng);
}

// ---------------------------------------------------------------------------
// Layout files: "<name>.txt" in the '.'/'#' text form plus a "<name>.json"
// sidecar {name, family, variant, params, default_tasks}.

inline nlohmann::json tasks_to_json(const TaskSet& tasks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Task& t : tasks) {
    arr.push_back({{"start", {t.start.x, t.start.y}}, {"goal", {t.goal.x, t.goal.y}}});
  }
  return arr;
}

inline TaskSet tasks_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw DecodeError("tasks must be an array");
  TaskSet tasks;
  for (const auto& item : arr) {
    auto cell = [&](const char* key) {
      if (!item.is_object() || !item.contains(key)) throw DecodeError(std::string("task is missing '") + key + "'");
      const auto& v = item.at(key);
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        throw DecodeError(std::string("task '") + key + "' must be [x, y]");
      }
      return Position{v[0].get<int>(), v[1].get<int>()};
    };
    tasks.push_back({cell("start"), cell("goal")});
  }
  return tasks;
}

inline nlohmann::json params_to_json(const VariantParams& p) {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* key, const std::optional<int>& v) {
    if (v) j[key] = *v;
  };
  put("corridor_length", p.corridor_length);
  put("passage_position", p.passage_position);
  put("path_length", p.path_length);
  put("aisle_count", p.aisle_count);
  put("aisle_length", p.aisle_length);
  put("n_agents", p.n_agents);
  return j;
}

inline VariantParams params_from_json(const nlohmann::json& j) {
  VariantParams p;
  if (!j.is_object()) return p;
  auto get = [&](const char* key, std::optional<int>& v) {
    if (j.contains(key) && j.at(key).is_number_integer()) v = j.at(key).get<int>();
  };
  get("corridor_length", p.corridor_length);
  get("passage_position", p.passage_position);
  get("path_length", p.path_length);
  get("aisle_count", p.aisle_count);
  get("aisle_length", p.aisle_length);
  get("n_agents", p.n_agents);
  return p;
}

struct LoadedLayout {
  GridLayout grid;
  std::optional<TaskSet> default_tasks;
  nlohmann::json meta;  // sidecar contents, empty object when absent
};

inline void write_layout_files(const std::filesystem::path& dir, const BuiltLayout& b) {
  std::filesystem::create_directories(dir);
  const std::string stem = b.grid.name();
  {
    std::ofstream txt(dir / (stem + ".txt"));
    if (!txt) throw IoError("cannot write " + (dir / (stem + ".txt")).string());
    txt << b.grid.to_text();
  }
  nlohmann::json meta = {{"name", stem},
                         {"family", to_string(b.id.family)},
                         {"variant", b.id.resolved_variant()},
                         {"params", params_to_json(b.params)}};
  if (b.default_tasks) meta["default_tasks"] = tasks_to_json(*b.default_tasks);
  std::ofstream js(dir / (stem + ".json"));
  if (!js) throw IoError("cannot write " + (dir / (stem + ".json")).string());
  js << meta.dump(2) << '\n';
}

inline LoadedLayout load_layout_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout file " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  LoadedLayout out;
  out.meta = nlohmann::json::object();
  std::filesystem::path sidecar = path;
  sidecar.replace_extension(".json");
  std::string name = path.stem().string();
  if (std::filesystem::exists(sidecar)) {
    std::ifstream js(sidecar);
    try {
      out.meta = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
      throw DecodeError("bad layout sidecar " + sidecar.string() + ": " + e.what());
    }
    if (out.meta.contains("name") && out.meta["name"].is_string()) name = out.meta["name"].get<std::string>();
    if (out.meta.contains("default_tasks")) out.default_tasks = tasks_from_json(out.meta["default_tasks"]);
  }
  try {
    out.grid = GridLayout::from_lines(lines, name);
  } catch (const ParameterError& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace mapfdl
