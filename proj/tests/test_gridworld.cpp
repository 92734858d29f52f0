#include <gtest/gtest.h>

#include <algorithm>

#include "confplan/gridworld.hpp"

using namespace confplan;

TEST(Arena, DefaultIs24By24) {
  const Arena a;
  EXPECT_EQ(a.cols(), 24);
  EXPECT_EQ(a.rows(), 24);
  EXPECT_LE(a.rows() * a.cell_size(), a.side_length() + a.cell_size());
}

TEST(Arena, RejectsNonPositiveCell) {
  EXPECT_THROW(Arena(3.0, 2.0, 0.0), Error);
}

TEST(Arena, SnapNearestAndTieTowardPrevious) {
  const auto a = Arena::from_cells(5, 5, 1.0);
  EXPECT_EQ(a.snap({2.4, 2.6}), (Cell{2, 2}));
  EXPECT_EQ(a.snap({-3.0, 9.0}), (Cell{0, 4}));
  // x = 2.0 sits exactly between cells 1 and 2.
  const Cell prev_lo{1, 1};
  const Cell prev_hi{2, 1};
  EXPECT_EQ(a.snap({2.0, 1.5}, &prev_lo).x, 1);
  EXPECT_EQ(a.snap({2.0, 1.5}, &prev_hi).x, 2);
}

TEST(StepHuman, Examples) {
  const auto a = Arena::from_cells(5, 5);
  EXPECT_EQ(step_human(a, {2, 2}, Action::Stay), (Cell{2, 2}));
  EXPECT_EQ(step_human(a, {2, 2}, Action::N), (Cell{2, 3}));
  try {
    step_human(a, {0, 0}, Action::SW);
    FAIL() << "expected infeasible action";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "infeasible action");
  }
}

TEST(FeasibleActions, InteriorCornerEdge) {
  const auto a = Arena::from_cells(5, 5);
  EXPECT_EQ(feasible_actions(a, {2, 2}).size(), 9u);
  const auto corner = feasible_actions(a, {0, 0});
  ASSERT_EQ(corner.size(), 4u);
  for (Action u : {Action::Stay, Action::N, Action::NE, Action::E})
    EXPECT_NE(std::find(corner.begin(), corner.end(), u), corner.end());
  for (int k = 1; k < a.rows() - 1; ++k) EXPECT_EQ(feasible_actions(a, {0, k}).size(), 6u);
}

TEST(InferAction, Examples) {
  EXPECT_EQ(infer_action({2, 2}, {2, 3}), Action::N);
  EXPECT_EQ(infer_action({2, 2}, {2, 2}), Action::Stay);
  try {
    infer_action({2, 2}, {4, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "non-adjacent transition");
  }
}

// Every state, every feasible action: successor in arena, round trip holds,
// stay always present.
TEST(GridworldProperties, ExhaustiveOverSmallArenas) {
  for (auto [cols, rows] : {std::pair{1, 1}, std::pair{1, 4}, std::pair{5, 5}, std::pair{7, 3}}) {
    const auto a = Arena::from_cells(cols, rows);
    for (std::size_t i = 0; i < a.num_cells(); ++i) {
      const Cell x = a.cell_at(i);
      const auto acts = feasible_actions(a, x);
      ASSERT_FALSE(acts.empty());
      EXPECT_EQ(acts.front(), Action::Stay);
      for (Action u : acts) {
        const Cell y = step_human(a, x, u);
        EXPECT_TRUE(a.contains(y));
        EXPECT_EQ(infer_action(x, y), u);
      }
    }
  }
}

TEST(UnitPath, SplitsJumpsIntoAdjacentSteps) {
  const auto path = unit_path({0, 0}, {3, 1});
  ASSERT_EQ(path.size(), 3u);
  Cell prev{0, 0};
  for (const Cell c : path) {
    EXPECT_NO_THROW(infer_action(prev, c));
    prev = c;
  }
  EXPECT_EQ(prev, (Cell{3, 1}));
  EXPECT_TRUE(unit_path({2, 2}, {2, 2}).empty());
}
