#include <doctest.h>

#include <set>

#include "cvdenoise/lattice.hpp"
#include "cvdenoise/rng.hpp"

using namespace cvdenoise;

TEST_CASE("dyadic_split uses the ceiling midpoint") {
  Rectangle r({1}, {5});
  auto [left, right] = dyadic_split(r, 0);
  CHECK(left == Rectangle({1}, {3}));
  CHECK(right == Rectangle({4}, {5}));

  Rectangle even({1}, {4});
  auto [l2, r2] = dyadic_split(even, 0);
  CHECK(l2 == Rectangle({1}, {2}));
  CHECK(r2 == Rectangle({3}, {4}));
}

TEST_CASE("dyadic_split acts on one axis of a product") {
  Rectangle r({3, 1}, {4, 4});
  auto [left, right] = dyadic_split(r, 1);
  CHECK(left == Rectangle({3, 1}, {4, 2}));
  CHECK(right == Rectangle({3, 3}, {4, 4}));
}

TEST_CASE("dyadic_split rejects unit-length axes") {
  Rectangle r({2, 1}, {2, 4});
  CHECK_THROWS_AS(dyadic_split(r, 0), std::invalid_argument);
}

TEST_CASE("rect_size adds the side lengths") {
  CHECK(rect_size(Rectangle({1, 1}, {4, 4})) == 8);
  CHECK(rect_size(Rectangle({2, 3, 5}, {2, 3, 5})) == 3);
  CHECK(rect_size(Rectangle({1, 3}, {2, 3})) == 3);
}

TEST_CASE("enumerate_dyadic_rectangles lists the 1-D intervals exactly once") {
  const auto rects = enumerate_dyadic_rectangles(LatticeShape(1, 4));
  std::set<std::pair<int, int>> got;
  for (const auto& r : rects) got.insert({r.lo[0], r.hi[0]});
  const std::set<std::pair<int, int>> expected{{1, 4}, {1, 2}, {3, 4}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  CHECK(got == expected);
  CHECK(rects.size() == 7);
  CHECK(rects.size() <= 8);
}

TEST_CASE("enumerate_dyadic_rectangles on a single point") {
  const auto rects = enumerate_dyadic_rectangles(LatticeShape(1, 1));
  REQUIRE(rects.size() == 1);
  CHECK(rects[0] == Rectangle({1}, {1}));
}

TEST_CASE("enumerate_dyadic_rectangles stays within 2^d N without duplicates") {
  for (int d = 1; d <= 3; ++d) {
    for (int n = 1; n <= 16; ++n) {
      if (d == 3 && n > 8) continue;  // keep the exhaustive sweep quick
      const LatticeShape shape(d, n);
      const auto rects = enumerate_dyadic_rectangles(shape);
      std::set<std::vector<int>> seen;
      for (const auto& r : rects) {
        std::vector<int> key = r.lo;
        key.insert(key.end(), r.hi.begin(), r.hi.end());
        CHECK(seen.insert(key).second);
      }
      std::int64_t bound = 1;
      for (int k = 0; k < d; ++k) bound *= 2 * n;
      CHECK(static_cast<std::int64_t>(rects.size()) <= bound);
    }
  }
  const auto two_by_two = enumerate_dyadic_rectangles(LatticeShape(2, 2));
  CHECK(two_by_two.size() <= 16);
}

namespace {

std::unique_ptr<RdpNode> random_tree(const Rectangle& rect, CounterRng& rng, int depth) {
  auto node = std::make_unique<RdpNode>();
  node->rect = rect;
  std::vector<int> splittable;
  for (int k = 0; k < rect.dim(); ++k)
    if (rect.length(k) >= 2) splittable.push_back(k);
  if (splittable.empty() || depth <= 0 || rng.next_unit() < 0.3) return node;
  const int axis = splittable[rng.next_u64() % splittable.size()];
  auto [left, right] = dyadic_split(rect, axis);
  node->split_axis = axis;
  node->left = random_tree(left, rng, depth - 1);
  node->right = random_tree(right, rng, depth - 1);
  return node;
}

}  // namespace

TEST_CASE("leaves walks depth-first, left-first") {
  RdpPartition trivial;
  trivial.root = std::make_unique<RdpNode>();
  trivial.root->rect = Rectangle({1}, {4});
  CHECK(leaves(trivial) == std::vector<Rectangle>{Rectangle({1}, {4})});

  RdpPartition split;
  split.root = std::make_unique<RdpNode>();
  split.root->rect = Rectangle({1}, {4});
  split.root->split_axis = 0;
  split.root->left = std::make_unique<RdpNode>();
  split.root->left->rect = Rectangle({1}, {2});
  split.root->right = std::make_unique<RdpNode>();
  split.root->right->rect = Rectangle({3}, {4});
  const auto ls = leaves(split);
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == Rectangle({1}, {2}));
  CHECK(ls[1] == Rectangle({3}, {4}));
}

TEST_CASE("random partitions cover the lattice and obey the tree identity") {
  CounterRng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 3);
    const int n = 2 + static_cast<int>(rng.next_u64() % 5);
    const LatticeShape shape(d, n);
    RdpPartition partition;
    partition.root = random_tree(Rectangle::full(shape), rng, 6);

    int internal = 0;
    std::vector<const RdpNode*> stack{partition.root.get()};
    while (!stack.empty()) {
      const RdpNode* node = stack.back();
      stack.pop_back();
      if (!node->is_leaf()) {
        ++internal;
        stack.push_back(node->left.get());
        stack.push_back(node->right.get());
      }
    }
    const auto ls = leaves(partition);
    CHECK(static_cast<int>(ls.size()) == internal + 1);
    CHECK(partition.leaf_count() == static_cast<int>(ls.size()));

    std::int64_t covered = 0;
    for (const auto& leaf : ls) covered += leaf.cell_count();
    CHECK(covered == shape.total());
  }
}
