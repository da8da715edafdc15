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

#include <filesystem>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "mapfdl/layouts.hpp"
#include "mapfdl/solvers.hpp"

namespace mapfdl {
namespace {

std::vector<BuiltLayout> every_variant() {
  std::vector<BuiltLayout> out;
  for (Family f : kAllFamilies)
    for (const std::string& v : family_variants(f)) out.push_back(build_layout({f, v}));
  return out;
}

int component_count(const GridLayout& g) {
  const auto label = connected_components(g);
  return 1 + *std::max_element(label.begin(), label.end());
}

TEST(Layouts, FamilyNamesParseLeniently) {
  EXPECT_EQ(parse_family("rm2.1"), Family::kRm2_1);
  EXPECT_EQ(parse_family("rm2_1"), Family::kRm2_1);
  EXPECT_EQ(parse_family("RM3.1"), Family::kRm3_1);
  EXPECT_EQ(parse_family("1.4"), Family::kRm1_4);
  EXPECT_FALSE(parse_family("rm9.9").has_value());
}

TEST(Layouts, EveryVariantIsConnectedAndDeterministic) {
  for (const BuiltLayout& b : every_variant()) {
    SCOPED_TRACE(b.grid.name());
    EXPECT_EQ(component_count(b.grid), 1);
    const BuiltLayout again = build_layout(b.id);
    EXPECT_EQ(again.grid, b.grid);
    EXPECT_EQ(again.grid.to_text(), b.grid.to_text());
    EXPECT_EQ(again.grid.name(), b.grid.name());
    if (b.default_tasks) {
      EXPECT_TRUE(validate_layout(b.grid, *b.default_tasks).empty());
    }
  }
}

TEST(Layouts, SizesStayWithinTheDocumentedEnvelope) {
  for (const BuiltLayout& b : every_variant()) {
    SCOPED_TRACE(b.grid.name());
    EXPECT_LE(b.grid.rows(), 10);
    EXPECT_LE(b.grid.cols(), 14);
  }
}

TEST(Layouts, UnknownVariantAndBadParamsAreRejected) {
  EXPECT_THROW(build_layout({Family::kRm2_1, "spiral"}), ParameterError);
  VariantParams p;
  p.corridor_length = 2;
  EXPECT_THROW(build_layout({Family::kRm1_2, "basic"}, p), ParameterError);
  VariantParams too_many;
  too_many.n_agents = 5;
  EXPECT_THROW(build_layout({Family::kRm1_1, "basic"}, too_many), ParameterError);
}

TEST(Layouts, Rm1_1BasicIsCalibratedToNine) {
  const BuiltLayout b = build_layout({Family::kRm1_1, "basic"});
  ASSERT_TRUE(b.default_tasks);
  ASSERT_EQ(b.default_tasks->size(), 2u);
  const OracleResult r = joint_bfs_oracle(b.grid, *b.default_tasks);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.makespan, 9);
  EXPECT_TRUE(validate_solution(b.grid, *b.default_tasks, r.witness).empty());
}

TEST(Layouts, Rm1_2CorridorIsSingleFileBetweenOpenEnds) {
  VariantParams p;
  p.corridor_length = 5;
  const BuiltLayout b = build_layout({Family::kRm1_2, "basic"}, p);
  // Exactly one row is free through the corridor columns.
  int single_file_columns = 0;
  for (int c = 0; c < b.grid.cols(); ++c) {
    int free = 0;
    for (int r = 0; r < b.grid.rows(); ++r) free += b.grid.is_free({r, c}) ? 1 : 0;
    if (free == 1) ++single_file_columns;
  }
  EXPECT_EQ(single_file_columns, 5);
}

TEST(Layouts, Rm2_1DeadEndsKeepsTheShellOfBlock) {
  const BuiltLayout block = build_layout({Family::kRm2_1, "block"});
  const BuiltLayout dead = build_layout({Family::kRm2_1, "dead-ends"});
  ASSERT_EQ(block.grid.rows(), dead.grid.rows());
  ASSERT_EQ(block.grid.cols(), dead.grid.cols());
  int extra_walls = 0;
  for (int r = 0; r < block.grid.rows(); ++r) {
    for (int c = 0; c < block.grid.cols(); ++c) {
      // dead-ends only ever adds walls
      if (block.grid.is_wall({r, c})) {
        EXPECT_TRUE(dead.grid.is_wall({r, c}));
      }
      if (!block.grid.is_wall({r, c}) && dead.grid.is_wall({r, c})) ++extra_walls;
    }
  }
  EXPECT_GT(extra_walls, 0);
  EXPECT_EQ(component_count(dead.grid), 1);
}

TEST(Layouts, ValidateLayoutExamples) {
  const GridLayout room = GridLayout::from_text("..#..\n..#..\n");
  EXPECT_TRUE(validate_layout(room, {{{0, 0}, {1, 1}}}).empty());
  EXPECT_EQ(validate_layout(room, {{{0, 0}, {0, 2}}}).size(), 1u);  // goal on wall
  const auto unreachable = validate_layout(room, {{{0, 0}, {0, 4}}});
  ASSERT_EQ(unreachable.size(), 1u);
  EXPECT_NE(unreachable.front().find("unreachable"), std::string::npos);
  EXPECT_EQ(validate_layout(room, {{{0, 0}, {0, 0}}}).size(), 1u);
  EXPECT_EQ(validate_layout(room, {{{0, 0}, {1, 1}}, {{0, 0}, {1, 0}}}).size(), 1u);
}

TEST(Sampling, Rm2_1BlockFourAgentsSeed42) {
  const BuiltLayout b = build_layout({Family::kRm2_1, "block"});
  const TaskSet tasks = sample_tasks(b.grid, 4, 42);
  ASSERT_EQ(tasks.size(), 4u);
  EXPECT_TRUE(validate_layout(b.grid, tasks).empty());
  EXPECT_EQ(sample_tasks(b.grid, 4, 42), tasks);
  EXPECT_NE(sample_tasks(b.grid, 4, 43), tasks);
}

TEST(Sampling, ThousandSeedsPerVariantAreValid) {
  for (const BuiltLayout& b : every_variant()) {
    SCOPED_TRACE(b.grid.name());
    const int n = std::min(4, static_cast<int>(b.grid.free_cells().size()) / 2);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const TaskSet t = sample_tasks(b.grid, n, seed);
      ASSERT_TRUE(validate_layout(b.grid, t).empty()) << "seed " << seed;
    }
  }
}

TEST(Sampling, CapacityOnATinyGrid) {
  const GridLayout g = GridLayout::from_text("...\n...\n...\n");
  // Every n up to half the free cells succeeds without duplicates; beyond
  // that the sampler refuses.
  for (int n = 1; n <= 4; ++n) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const TaskSet t = sample_tasks(g, n, seed);
      std::set<Position> starts, goals;
      for (const Task& task : t) {
        starts.insert(task.start);
        goals.insert(task.goal);
      }
      EXPECT_EQ(starts.size(), static_cast<std::size_t>(n));
      EXPECT_EQ(goals.size(), static_cast<std::size_t>(n));
      EXPECT_TRUE(validate_layout(g, t).empty());
    }
  }
  EXPECT_THROW(sample_tasks(g, 5, 1), CapacityError);
}

TEST(LayoutFiles, WriteThenLoadRoundTrips) {
  const auto dir = std::filesystem::temp_directory_path() / "mapfdl_layout_test";
  std::filesystem::remove_all(dir);
  const BuiltLayout b = build_layout({Family::kRm1_1, "basic"});
  write_layout_files(dir, b);
  const LoadedLayout back = load_layout_file(dir / "rm1.1-basic.txt");
  EXPECT_EQ(back.grid, b.grid);
  EXPECT_EQ(back.grid.name(), "rm1.1-basic");
  ASSERT_TRUE(back.default_tasks);
  EXPECT_EQ(*back.default_tasks, *b.default_tasks);
  EXPECT_EQ(back.meta.at("family"), "rm1.1");
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_layout_file(dir / "missing.txt"), IoError);
}

TEST(LayoutFiles, ShippedFilesMatchTheGenerators) {
  const std::filesystem::path shipped = std::filesystem::path(MAPFDL_SOURCE_DIR) / "layouts";
  for (const BuiltLayout& b : every_variant()) {
    SCOPED_TRACE(b.grid.name());
    const LoadedLayout l = load_layout_file(shipped / (b.grid.name() + ".txt"));
    EXPECT_EQ(l.grid, b.grid);
  }
}

}  // namespace
}  // namespace mapfdl
