#include <cmath>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "pabs/error.hpp"
#include "pabs/partition.hpp"

using namespace pabs;

namespace {

PartitionSpec gem_spec(int ny = 8, int nt = 5) {
  return {{-1.2, 1.2}, {-std::numbers::pi / 12, std::numbers::pi / 12}, ny, nt};
}

}  // namespace

TEST(Partition, GemCells) {
  const auto cells = build_partition(gem_spec());
  ASSERT_EQ(cells.size(), 40u);
  EXPECT_EQ(cells[0].iy, 0);
  EXPECT_EQ(cells[0].itheta, 0);
  EXPECT_NEAR(cells[0].y_bounds.lo, -1.2, 1e-15);
  EXPECT_NEAR(cells[0].y_bounds.hi, -0.9, 1e-15);
  EXPECT_NEAR(cells[0].theta_bounds.width(), std::numbers::pi / 30, 1e-15);
  EXPECT_EQ(cells[1].itheta, 1);  // row-major
}

TEST(Partition, SingleCell) {
  const auto cells = build_partition(gem_spec(1, 1));
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].y_bounds, Interval(-1.2, 1.2));
}

TEST(Partition, TilingAndLocate) {
  for (auto [ny, nt] : {std::pair{8, 5}, {8, 10}, {8, 20}, {3, 7}}) {
    const Partition part(gem_spec(ny, nt));
    double area = 0;
    for (const auto& c : part.cells()) {
      area += c.y_bounds.width() * c.theta_bounds.width();
      const auto found = part.locate(c.center());
      ASSERT_TRUE(found);
      EXPECT_EQ(*found, c);
      EXPECT_EQ(locate(c.center(), part.cells()), c);
    }
    EXPECT_NEAR(area, 2.4 * std::numbers::pi / 6, 1e-12);
  }
}

TEST(Partition, LocateEdges) {
  const Partition part(gem_spec());
  const auto corner = part.locate({0, -1.2, -std::numbers::pi / 12});
  ASSERT_TRUE(corner);
  EXPECT_EQ(corner->iy, 0);
  EXPECT_EQ(corner->itheta, 0);
  const auto last = part.locate({0, 1.2, std::numbers::pi / 12});
  ASSERT_TRUE(last);
  EXPECT_EQ(last->iy, 7);
  EXPECT_EQ(last->itheta, 4);
  EXPECT_FALSE(part.locate({0, 2.0, 0}));
  // a shared face belongs to the upper cell
  const auto face = part.locate({0, part.cell(3, 0).y_bounds.hi, 0});
  ASSERT_TRUE(face);
  EXPECT_EQ(face->iy, 4);
}

TEST(Partition, RefineMap) {
  for (int k : {2, 4}) {
    const auto fine = gem_spec(8, 5 * k);
    const auto pairs = refine_map(gem_spec(), fine);
    ASSERT_EQ(pairs.size(), 40u * k);
    std::map<std::pair<int, int>, int> children;
    for (const auto& [child, parent] : pairs) {
      ++children[{parent.iy, parent.itheta}];
      EXPECT_TRUE(parent.y_bounds.contains(child.y_bounds));
      EXPECT_TRUE(parent.theta_bounds.contains(child.theta_bounds));
    }
    for (const auto& [cell, n] : children) EXPECT_EQ(n, k);
  }
  EXPECT_THROW(refine_map(gem_spec(), gem_spec(7, 10)), ConfigError);
}

// Boundaries of a dyadic refinement are the coarse boundaries plus midpoints, bit for bit.
TEST(Partition, DyadicBoundariesNest) {
  const auto coarse = axis_boundaries({-std::numbers::pi / 12, std::numbers::pi / 12}, 5);
  const auto fine = axis_boundaries({-std::numbers::pi / 12, std::numbers::pi / 12}, 20);
  for (std::size_t i = 0; i < coarse.size(); ++i) EXPECT_EQ(fine[4 * i], coarse[i]);
}

TEST(Partition, Validation) {
  EXPECT_THROW(build_partition({{0, 0}, {0, 1}, 1, 1}), ConfigError);
  EXPECT_THROW(build_partition({{0, 1}, {0, 1}, 0, 1}), ConfigError);
}
