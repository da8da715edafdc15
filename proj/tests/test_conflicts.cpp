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

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mapfdl/conflicts.hpp"

namespace mapfdl {
namespace {

TEST(Conflicts, ThreeAgentRotationIsOneCycle) {
  // Grid graphs have no triangles, so the three-agent rotation uses abstract
  // cells; the classifier does not check adjacency.
  const std::vector<Path> tri{{{0, 0}, {0, 1}}, {{0, 1}, {1, 1}}, {{1, 1}, {0, 0}}};
  const auto reports = classify_conflicts(tri);
  EXPECT_EQ(count_kind(reports, ConflictKind::kCycle), 1u);
  EXPECT_EQ(count_kind(reports, ConflictKind::kSwapping), 0u);
  EXPECT_EQ(count_kind(reports, ConflictKind::kVertex), 0u);
  for (const auto& r : reports)
    if (r.kind == ConflictKind::kCycle) {
      EXPECT_EQ(r.agents.size(), 3u);
    }

  const std::vector<Path> ring{{{0, 0}, {0, 1}}, {{0, 1}, {1, 1}}, {{1, 1}, {1, 0}}, {{1, 0}, {0, 0}}};
  EXPECT_EQ(count_kind(classify_conflicts(ring), ConflictKind::kCycle), 1u);
  EXPECT_EQ(count_kind(classify_conflicts(ring), ConflictKind::kFollowing), 4u);
}

TEST(Conflicts, SingleAgentHasNone) {
  EXPECT_TRUE(classify_conflicts({{{0, 0}, {0, 1}, {0, 2}}}).empty());
  EXPECT_TRUE(classify_conflicts({}).empty());
}

TEST(Conflicts, FollowingIntoVacatedCell) {
  const std::vector<Path> plans{{{0, 0}, {0, 1}}, {{0, 1}, {1, 1}}};
  const auto reports = classify_conflicts(plans);
  ASSERT_EQ(count_kind(reports, ConflictKind::kFollowing), 1u);
  for (const auto& r : reports) {
    if (r.kind != ConflictKind::kFollowing) continue;
    EXPECT_EQ(r.agents, (std::vector<int>{0, 1}));
    EXPECT_EQ(r.timestep, 0);
  }
  EXPECT_EQ(count_kind(reports, ConflictKind::kVertex), 0u);
}

TEST(Conflicts, SwapIsTwoAgentsAndNotACycle) {
  const std::vector<Path> plans{{{0, 0}, {0, 1}}, {{0, 1}, {0, 0}}};
  const auto reports = classify_conflicts(plans);
  EXPECT_EQ(count_kind(reports, ConflictKind::kSwapping), 1u);
  EXPECT_EQ(count_kind(reports, ConflictKind::kCycle), 0u);
}

TEST(Conflicts, VertexAndEdgeSameDirection) {
  const std::vector<Path> plans{{{0, 0}, {0, 1}, {0, 2}}, {{1, 1}, {0, 1}, {0, 2}}};
  const auto reports = classify_conflicts(plans);
  EXPECT_EQ(count_kind(reports, ConflictKind::kVertex), 2u);
  EXPECT_EQ(count_kind(reports, ConflictKind::kEdgeSameDirection), 1u);
}

TEST(Conflicts, FinishedPlansStayOnTheirLastCell) {
  const std::vector<Path> plans{{{0, 0}}, {{0, 2}, {0, 1}, {0, 0}}};
  const auto reports = classify_conflicts(plans);
  ASSERT_EQ(count_kind(reports, ConflictKind::kVertex), 1u);
  EXPECT_EQ(reports.front().timestep, 2);
}

TEST(Objectives, ArrivalTimesAndAggregates) {
  Path five{{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}};
  Path nine{{1, 0}, {1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6}, {1, 7}, {1, 8}, {1, 9}};
  EXPECT_EQ(makespan({five, nine}), 9);
  EXPECT_EQ(sum_of_costs({five, nine}), 14);
  EXPECT_EQ(makespan({{{2, 2}}}), 0);
  EXPECT_EQ(sum_of_costs({{{2, 2}}}), 0);
  // Leaving and re-entering the goal counts the last arrival.
  EXPECT_EQ(arrival_time({{0, 0}, {0, 1}, {0, 0}, {0, 1}, {0, 1}}), 3);
}

TEST(Objectives, BoundsHoldOnRandomPlans) {
  std::mt19937 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<Path> plans;
    for (int i = 0; i < n; ++i) {
      Path p{{0, 0}};
      const int len = static_cast<int>(rng() % 12);
      for (int t = 0; t < len; ++t) p.push_back(shifted(p.back(), kAllActions[rng() % 5]));
      plans.push_back(p);
    }
    EXPECT_LE(makespan(plans), sum_of_costs(plans));
    EXPECT_LE(sum_of_costs(plans), n * makespan(plans));
  }
}

TEST(Conflicts, StepwiseCollisionCheckAgreesWithClassifier) {
  // Standard model: zero vertex and swapping reports exactly when no step of
  // the plans is flagged by detect_collisions (plans start on distinct cells).
  std::mt19937 rng(5);
  const std::vector<Position> cells{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};
  for (int k = 0; k < 3000; ++k) {
    std::vector<Position> pool = cells;
    std::shuffle(pool.begin(), pool.end(), rng);
    const int n = 2 + static_cast<int>(rng() % 3);
    std::vector<Path> plans;
    const int len = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      Path p{pool[static_cast<std::size_t>(i)]};
      for (int t = 0; t < len; ++t) {
        Position q = shifted(p.back(), kAllActions[rng() % 5]);
        if (q.x < 0 || q.x > 1 || q.y < 0 || q.y > 2) q = p.back();
        p.push_back(q);
      }
      plans.push_back(p);
    }
    const auto reports = classify_conflicts(plans);
    const bool classified = count_kind(reports, ConflictKind::kVertex) + count_kind(reports, ConflictKind::kSwapping) > 0;
    bool flagged = false;
    for (int t = 0; t < len; ++t) {
      std::vector<Position> cur, nxt;
      for (const Path& p : plans) {
        cur.push_back(position_at(p, t));
        nxt.push_back(position_at(p, t + 1));
      }
      flagged = flagged || detect_collisions(cur, nxt, CollisionModel::kStandard).any();
    }
    EXPECT_EQ(classified, flagged);
  }
}

}  // namespace
}  // namespace mapfdl
