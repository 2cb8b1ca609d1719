#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cvdenoise/cvcore.hpp"
#include "cvdenoise/lattice.hpp"
#include "cvdenoise/numeric.hpp"

namespace cvdenoise {

struct DpStats {
  std::int64_t rectangles = 0;     // dyadic rectangles visited
  std::int64_t dp_operations = 0;  // candidate costs evaluated in the OPT pass
};

struct DcartFit {
  LatticeShape shape;
  std::vector<double> fitted;
  RdpPartition partition;
  double objective = 0.0;
  int leaf_count = 0;
  DpStats stats;
};

namespace detail {

// Dyadic intervals of [1, n] と the two children each splits into, plus a
// mixed-radix id scheme for products of intervals (one per axis).
struct DyadicIntervalTable {
  std::vector<int> lo, hi, left, right;  // interval id -> bounds and child ids

  explicit DyadicIntervalTable(int n) { build(1, n); }

  int count() const { return static_cast<int>(lo.size()); }
  int length(int id) const { return hi[id] - lo[id] + 1; }

 private:
  int build(int a, int b) {
    const int id = count();
    lo.push_back(a);
    hi.push_back(b);
    left.push_back(-1);
    right.push_back(-1);
    if (b > a) {
      const int mid = a - 1 + (b - a + 2) / 2;
      const int l = build(a, mid);
      const int r = build(mid + 1, b);
      left[id] = l;
      right[id] = r;
    }
    return id;
  }
};

struct RectCode {
  const DyadicIntervalTable* intervals;
  int dim;
  std::vector<std::int64_t> stride;

  RectCode(const DyadicIntervalTable& table, int d) : intervals(&table), dim(d) {
    stride.resize(static_cast<std::size_t>(d));
    std::int64_t s = 1;
    for (int k = 0; k < d; ++k) {
      stride[static_cast<std::size_t>(k)] = s;
      s *= table.count();
    }
  }

  std::int64_t total() const {
    return stride.back() * intervals->count();
  }

  int interval_of(std::int64_t rid, int axis) const {
    return static_cast<int>((rid / stride[static_cast<std::size_t>(axis)]) % intervals->count());
  }

  std::int64_t replace(std::int64_t rid, int axis, int interval_id) const {
    const std::int64_t s = stride[static_cast<std::size_t>(axis)];
    const int old = interval_of(rid, axis);
    return rid + (static_cast<std::int64_t>(interval_id) - old) * s;
  }

  int size_of(std::int64_t rid) const {
    int s = 0;
    for (int k = 0; k < dim; ++k) s += intervals->length(interval_of(rid, k));
    return s;
  }

  Rectangle rectangle_of(std::int64_t rid) const {
    std::vector<int> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
      const int iid = interval_of(rid, k);
      lo[static_cast<std::size_t>(k)] = intervals->lo[iid];
      hi[static_cast<std::size_t>(k)] = intervals->hi[iid];
    }
    return Rectangle(std::move(lo), std::move(hi));
  }
};

// Per-rectangle records of the bottom-up pass. Sums are kept in extended
// precision so the objective stays reliable at N in the tens of thousands.
struct DpTable {
  std::vector<long double> sum, sumsq;
  std::vector<std::int64_t> count;
  std::vector<double> opt;
  std::vector<int> split;  // -1 keeps the rectangle whole, else the split axis
};

inline std::int64_t linear_index(const LatticeShape& shape, const std::vector<int>& coords) {
  std::int64_t idx = 0;
  std::int64_t s = 1;
  for (int k = 0; k < shape.dim; ++k) {
    idx += static_cast<std::int64_t>(coords[static_cast<std::size_t>(k)] - 1) * s;
    s *= shape.side;
  }
  return idx;
}

template <typename Fn>
void for_each_cell(const Rectangle& rect, const LatticeShape& shape, Fn&& fn) {
  std::vector<int> coords(rect.lo);
  while (true) {
    fn(linear_index(shape, coords));
    int k = 0;
    for (; k < rect.dim(); ++k) {
      if (++coords[static_cast<std::size_t>(k)] <= rect.hi[static_cast<std::size_t>(k)]) break;
      coords[static_cast<std::size_t>(k)] = rect.lo[static_cast<std::size_t>(k)];
    }
    if (k == rect.dim()) break;
  }
}

// Rectangles in increasing Size(R), ties broken by corner order, so every
// child precedes its parent and the pass is single-visit.
inline std::vector<std::int64_t> visit_order(const RectCode& code) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(code.total()));
  for (std::int64_t rid = 0; rid < code.total(); ++rid) order[static_cast<std::size_t>(rid)] = rid;
  std::vector<int> sizes(order.size());
  for (std::int64_t rid = 0; rid < code.total(); ++rid)
    sizes[static_cast<std::size_t>(rid)] = code.size_of(rid);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    const int sa = sizes[static_cast<std::size_t>(a)];
    const int sb = sizes[static_cast<std::size_t>(b)];
    if (sa != sb) return sa < sb;
    for (int k = 0; k < code.dim; ++k) {
      const int ia = code.interval_of(a, k);
      const int ib = code.interval_of(b, k);
      if (code.intervals->lo[ia] != code.intervals->lo[ib])
        return code.intervals->lo[ia] < code.intervals->lo[ib];
      if (code.intervals->hi[ia] != code.intervals->hi[ib])
        return code.intervals->hi[ia] < code.intervals->hi[ib];
    }
    return false;
  });
  return order;
}

struct DpWorkspace {
  DyadicIntervalTable intervals;
  RectCode code;
  std::vector<std::int64_t> order;
  DpTable table;

  DpWorkspace(const LatticeShape& shape) : intervals(shape.side), code(intervals, shape.dim) {
    order = visit_order(code);
    const std::size_t total = static_cast<std::size_t>(code.total());
    table.sum.assign(total, 0.0L);
    table.sumsq.assign(total, 0.0L);
    table.count.assign(total, 0);
    table.opt.assign(total, 0.0);
    table.split.assign(total, -1);
  }
};

inline void accumulate_stats(DpWorkspace& ws, const LatticeShape& shape,
                             const std::vector<double>& y, const std::vector<char>& observed) {
  for (std::int64_t rid : ws.order) {
    int split_axis = -1;
    for (int k = 0; k < ws.code.dim; ++k) {
      if (ws.intervals.length(ws.code.interval_of(rid, k)) >= 2) {
        split_axis = k;
        break;
      }
    }
    if (split_axis < 0) {
      // Unit cell: read the observation directly.
      std::vector<int> coords(static_cast<std::size_t>(ws.code.dim));
      for (int k = 0; k < ws.code.dim; ++k)
        coords[static_cast<std::size_t>(k)] = ws.intervals.lo[ws.code.interval_of(rid, k)];
      const std::int64_t cell = linear_index(shape, coords);
      if (observed[static_cast<std::size_t>(cell)]) {
        const double v = y[static_cast<std::size_t>(cell)];
        ws.table.sum[static_cast<std::size_t>(rid)] = v;
        ws.table.sumsq[static_cast<std::size_t>(rid)] = static_cast<long double>(v) * v;
        ws.table.count[static_cast<std::size_t>(rid)] = 1;
      }
    } else {
      const int iid = ws.code.interval_of(rid, split_axis);
      const std::int64_t c1 = ws.code.replace(rid, split_axis, ws.intervals.left[iid]);
      const std::int64_t c2 = ws.code.replace(rid, split_axis, ws.intervals.right[iid]);
      ws.table.sum[static_cast<std::size_t>(rid)] =
          ws.table.sum[static_cast<std::size_t>(c1)] + ws.table.sum[static_cast<std::size_t>(c2)];
      ws.table.sumsq[static_cast<std::size_t>(rid)] =
          ws.table.sumsq[static_cast<std::size_t>(c1)] + ws.table.sumsq[static_cast<std::size_t>(c2)];
      ws.table.count[static_cast<std::size_t>(rid)] =
          ws.table.count[static_cast<std::size_t>(c1)] + ws.table.count[static_cast<std::size_t>(c2)];
    }
  }
}

// OPT(R) = min over dyadic splits of OPT(R1) + OPT(R2) versus the cost of
// keeping R whole. Ties keep the rectangle whole; among splitting axes the
// lowest index wins.
inline DpStats optimize(DpWorkspace& ws, double lambda) {
  DpStats stats;
  for (std::int64_t rid : ws.order) {
    ++stats.rectangles;
    const std::int64_t cnt = ws.table.count[static_cast<std::size_t>(rid)];
    double nosplit = lambda;
    if (cnt > 0) {
      const long double s = ws.table.sum[static_cast<std::size_t>(rid)];
      const long double ss = ws.table.sumsq[static_cast<std::size_t>(rid)];
      const long double sse = ss - s * s / static_cast<long double>(cnt);
      nosplit += static_cast<double>(std::max(sse, 0.0L));
    }
    ++stats.dp_operations;
    double best = nosplit;
    int best_axis = -1;
    for (int k = 0; k < ws.code.dim; ++k) {
      const int iid = ws.code.interval_of(rid, k);
      if (ws.intervals.length(iid) < 2) continue;
      const std::int64_t c1 = ws.code.replace(rid, k, ws.intervals.left[iid]);
      const std::int64_t c2 = ws.code.replace(rid, k, ws.intervals.right[iid]);
      const double cand =
          ws.table.opt[static_cast<std::size_t>(c1)] + ws.table.opt[static_cast<std::size_t>(c2)];
      ++stats.dp_operations;
      if (cand < best) {
        best = cand;
        best_axis = k;
      }
    }
    ws.table.opt[static_cast<std::size_t>(rid)] = best;
    ws.table.split[static_cast<std::size_t>(rid)] = best_axis;
  }
  return stats;
}

inline std::unique_ptr<RdpNode> rebuild(const DpWorkspace& ws, std::int64_t rid) {
  auto node = std::make_unique<RdpNode>();
  node->rect = ws.code.rectangle_of(rid);
  const int axis = ws.table.split[static_cast<std::size_t>(rid)];
  if (axis >= 0) {
    node->split_axis = axis;
    const int iid = ws.code.interval_of(rid, axis);
    node->left = rebuild(ws, ws.code.replace(rid, axis, ws.intervals.left[iid]));
    node->right = rebuild(ws, ws.code.replace(rid, axis, ws.intervals.right[iid]));
  }
  return node;
}

inline void fill_leaf_values(const DpWorkspace& ws, const RdpNode& node, std::int64_t rid,
                             const LatticeShape& shape, double mean_of_observed,
                             std::vector<double>& fitted, int& leaf_count) {
  if (node.is_leaf()) {
    ++leaf_count;
    const std::int64_t cnt = ws.table.count[static_cast<std::size_t>(rid)];
    const double value =
        cnt > 0 ? static_cast<double>(ws.table.sum[static_cast<std::size_t>(rid)] /
                                      static_cast<long double>(cnt))
                : mean_of_observed;
    for_each_cell(node.rect, shape, [&](std::int64_t cell) {
      fitted[static_cast<std::size_t>(cell)] = value;
    });
    return;
  }
  const int iid = ws.code.interval_of(rid, node.split_axis);
  fill_leaf_values(ws, *node.left, ws.code.replace(rid, node.split_axis, ws.intervals.left[iid]),
                   shape, mean_of_observed, fitted, leaf_count);
  fill_leaf_values(ws, *node.right, ws.code.replace(rid, node.split_axis, ws.intervals.right[iid]),
                   shape, mean_of_observed, fitted, leaf_count);
}

}  // namespace detail

// Least squares over piecewise-constant arrays on recursive dyadic
// partitions, penalized by lambda per leaf, fit to the observations in
// `observed` only. Leaves without observed cells take the mean of all
// observed entries.
inline DcartFit solve_completion(const LatticeSignal& y, const std::vector<int>& observed,
                                 double lambda) {
  if (observed.empty()) throw std::invalid_argument("solve_completion: empty observation set");
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_completion: lambda must be positive");

  const LatticeShape shape = y.shape;
  std::vector<char> mask(y.values.size(), 0);
  for (int i : observed) {
    if (i < 0 || static_cast<std::size_t>(i) >= y.values.size())
      throw std::invalid_argument("solve_completion: observation index out of range");
    mask[static_cast<std::size_t>(i)] = 1;
  }

  detail::DpWorkspace ws(shape);
  detail::accumulate_stats(ws, shape, y.values, mask);
  const DpStats stats = detail::optimize(ws, lambda);

  const std::int64_t root = ws.order.back();
  DcartFit fit;
  fit.shape = shape;
  fit.stats = stats;
  fit.objective = ws.table.opt[static_cast<std::size_t>(root)];
  fit.partition.root = detail::rebuild(ws, root);
  fit.fitted.assign(y.values.size(), 0.0);
  const double mean_observed =
      static_cast<double>(ws.table.sum[static_cast<std::size_t>(root)] /
                          static_cast<long double>(ws.table.count[static_cast<std::size_t>(root)]));
  int leaf_count = 0;
  detail::fill_leaf_values(ws, *fit.partition.root, root, shape, mean_observed, fit.fitted,
                           leaf_count);
  fit.leaf_count = leaf_count;
  return fit;
}

inline DcartFit solve_full(const LatticeSignal& y, double lambda) {
  std::vector<int> all(y.values.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return solve_completion(y, all, lambda);
}

// Recomputes the partition cost from scratch, independent of the DP tables.
inline double objective(const LatticeSignal& y, const std::vector<int>& observed,
                        const DcartFit& fit, double lambda) {
  std::vector<char> mask(y.values.size(), 0);
  for (int i : observed) mask[static_cast<std::size_t>(i)] = 1;

  KahanSum total;
  const auto leaf_rects = leaves(fit.partition);
  for (const Rectangle& rect : leaf_rects) {
    KahanSum sum;
    std::int64_t count = 0;
    detail::for_each_cell(rect, y.shape, [&](std::int64_t cell) {
      if (mask[static_cast<std::size_t>(cell)]) {
        sum.add(y.values[static_cast<std::size_t>(cell)]);
        ++count;
      }
    });
    if (count == 0) continue;
    const double mean = sum.value() / static_cast<double>(count);
    detail::for_each_cell(rect, y.shape, [&](std::int64_t cell) {
      if (mask[static_cast<std::size_t>(cell)]) {
        const double d = y.values[static_cast<std::size_t>(cell)] - mean;
        total.add(d * d);
      }
    });
  }
  return total.value() + lambda * static_cast<double>(leaf_rects.size());
}

struct DcartFamily {
  LatticeShape shape;

  std::vector<double> full_fit(const std::vector<double>& y, double lambda) const {
    return solve_full(LatticeSignal(shape, y), lambda).fitted;
  }

  std::vector<double> completion_fit(const std::vector<double>& y, const FoldAssignment& folds,
                                     int j, double lambda) const {
    return solve_completion(LatticeSignal(shape, y), folds.complement(j), lambda).fitted;
  }
};

// Two Bernoulli folds, completion fits on each fold's complement, final fit
// on the full data at the selected lambda.
inline CvResult cvdcart(const LatticeSignal& y, const LambdaGrid& grid, std::uint64_t seed) {
  if (y.shape.total() < 4) throw std::invalid_argument("cvdcart: need at least 4 lattice points");
  DcartFamily family{y.shape};
  CvConfig config;
  config.scheme = FoldScheme::bernoulli;
  config.grid = grid;
  config.seed = seed;
  return run_cv(family, y.values, config);
}

}  // namespace cvdenoise
