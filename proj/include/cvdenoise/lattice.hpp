#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cvdenoise {

// Square lattice with `dim` axes of common side length `side`.
struct LatticeShape {
  int dim = 1;
  int side = 1;

  LatticeShape() = default;
  LatticeShape(int d, int n) : dim(d), side(n) {
    if (d < 1 || n < 1) throw std::invalid_argument("LatticeShape: dim and side must be >= 1");
  }

  std::int64_t total() const {
    std::int64_t t = 1;
    for (int k = 0; k < dim; ++k) t *= side;
    return t;
  }
};

// Real-valued array over a lattice, stored row-major with the first axis
// fastest: linear index of (i_1,...,i_d), 1-based, is sum (i_k - 1) * side^(k-1).
struct LatticeSignal {
  LatticeShape shape;
  std::vector<double> values;

  LatticeSignal() = default;
  LatticeSignal(LatticeShape s, std::vector<double> v) : shape(s), values(std::move(v)) {
    if (static_cast<std::int64_t>(values.size()) != shape.total())
      throw std::invalid_argument("LatticeSignal: value count does not match shape");
  }
};

// Axis-aligned rectangle: per-axis closed integer intervals [lo_k, hi_k],
// 1-based, contained in the lattice.
struct Rectangle {
  std::vector<int> lo;
  std::vector<int> hi;

  Rectangle() = default;
  Rectangle(std::vector<int> a, std::vector<int> b) : lo(std::move(a)), hi(std::move(b)) {
    if (lo.size() != hi.size() || lo.empty())
      throw std::invalid_argument("Rectangle: mismatched bounds");
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (lo[k] < 1 || lo[k] > hi[k]) throw std::invalid_argument("Rectangle: empty interval");
  }

  static Rectangle full(const LatticeShape& shape) {
    return Rectangle(std::vector<int>(shape.dim, 1), std::vector<int>(shape.dim, shape.side));
  }

  int dim() const { return static_cast<int>(lo.size()); }
  int length(int axis) const { return hi[axis] - lo[axis] + 1; }

  std::int64_t cell_count() const {
    std::int64_t c = 1;
    for (int k = 0; k < dim(); ++k) c *= length(k);
    return c;
  }

  bool operator==(const Rectangle& o) const { return lo == o.lo && hi == o.hi; }
};

// Size(R) = sum of side lengths; the induction order of the bottom-up solver.
inline int rect_size(const Rectangle& r) {
  int s = 0;
  for (int k = 0; k < r.dim(); ++k) s += r.length(k);
  return s;
}

// Splits [a, b] on `axis` into [a, a - 1 + ceil((b - a + 1) / 2)] and the rest.
inline std::pair<Rectangle, Rectangle> dyadic_split(const Rectangle& rect, int axis) {
  if (axis < 0 || axis >= rect.dim()) throw std::invalid_argument("dyadic_split: bad axis");
  const int len = rect.length(axis);
  if (len < 2) throw std::invalid_argument("dyadic_split: axis has length 1");
  const int mid = rect.lo[axis] - 1 + (len + 1) / 2;
  Rectangle left = rect;
  Rectangle right = rect;
  left.hi[axis] = mid;
  right.lo[axis] = mid + 1;
  return {left, right};
}

// Binary split tree encoding a recursive dyadic partition. Internal nodes
// carry the axis that was split; leaves are the partition's rectangles.
struct RdpNode {
  Rectangle rect;
  int split_axis = -1;  // -1 at leaves
  std::unique_ptr<RdpNode> left;
  std::unique_ptr<RdpNode> right;

  bool is_leaf() const { return split_axis < 0; }
};

struct RdpPartition {
  std::unique_ptr<RdpNode> root;

  int leaf_count() const { return root ? count_leaves(*root) : 0; }

 private:
  static int count_leaves(const RdpNode& n) {
    return n.is_leaf() ? 1 : count_leaves(*n.left) + count_leaves(*n.right);
  }
};

// Leaf rectangles in depth-first, left-first order.
inline std::vector<Rectangle> leaves(const RdpPartition& partition) {
  std::vector<Rectangle> out;
  if (!partition.root) return out;
  std::vector<const RdpNode*> stack{partition.root.get()};
  while (!stack.empty()) {
    const RdpNode* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      out.push_back(n->rect);
    } else {
      stack.push_back(n->right.get());
      stack.push_back(n->left.get());
    }
  }
  return out;
}

namespace detail {

inline void collect_dyadic_intervals(int a, int b, std::vector<std::pair<int, int>>& out) {
  out.emplace_back(a, b);
  if (b > a) {
    const int mid = a - 1 + (b - a + 2) / 2;
    collect_dyadic_intervals(a, mid, out);
    collect_dyadic_intervals(mid + 1, b, out);
  }
}

}  // namespace detail

// All rectangles reachable as leaves of some recursive dyadic partition of
// the lattice: products of per-axis dyadic intervals. At most 2^d * N.
inline std::vector<Rectangle> enumerate_dyadic_rectangles(const LatticeShape& shape) {
  std::vector<std::pair<int, int>> intervals;
  detail::collect_dyadic_intervals(1, shape.side, intervals);

  std::vector<Rectangle> out;
  std::vector<std::size_t> pick(shape.dim, 0);
  while (true) {
    std::vector<int> lo(shape.dim), hi(shape.dim);
    for (int k = 0; k < shape.dim; ++k) {
      lo[k] = intervals[pick[k]].first;
      hi[k] = intervals[pick[k]].second;
    }
    out.emplace_back(std::move(lo), std::move(hi));
    int k = 0;
    for (; k < shape.dim; ++k) {
      if (++pick[k] < intervals.size()) break;
      pick[k] = 0;
    }
    if (k == shape.dim) break;
  }
  return out;
}

}  // namespace cvdenoise
