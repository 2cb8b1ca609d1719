// Test-only reference implementations, kept independent of the library's
// solver paths: exhaustive partition enumeration, direct cost evaluation,
// dense polynomial least squares, and toy estimator families.
#pragma once

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "cvdenoise/cvcore.hpp"
#include "cvdenoise/lattice.hpp"

namespace oracles {

using cvdenoise::FoldAssignment;
using cvdenoise::LambdaGrid;
using cvdenoise::LatticeShape;
using cvdenoise::Rectangle;

// Every recursive dyadic partition of `rect`, as a list of leaf rectangles.
inline std::vector<std::vector<Rectangle>> enumerate_rdps(const Rectangle& rect) {
  std::vector<std::vector<Rectangle>> out;
  out.push_back({rect});
  for (int axis = 0; axis < rect.dim(); ++axis) {
    if (rect.length(axis) < 2) continue;
    const auto [left, right] = cvdenoise::dyadic_split(rect, axis);
    const auto left_parts = enumerate_rdps(left);
    const auto right_parts = enumerate_rdps(right);
    for (const auto& lp : left_parts) {
      for (const auto& rp : right_parts) {
        std::vector<Rectangle> combined = lp;
        combined.insert(combined.end(), rp.begin(), rp.end());
        out.push_back(std::move(combined));
      }
    }
  }
  return out;
}

inline std::vector<std::int64_t> cells_of(const Rectangle& rect, const LatticeShape& shape) {
  std::vector<std::int64_t> cells;
  std::vector<int> c(rect.lo);
  while (true) {
    std::int64_t idx = 0, stride = 1;
    for (int k = 0; k < shape.dim; ++k) {
      idx += static_cast<std::int64_t>(c[static_cast<std::size_t>(k)] - 1) * stride;
      stride *= shape.side;
    }
    cells.push_back(idx);
    int k = 0;
    for (; k < rect.dim(); ++k) {
      if (++c[static_cast<std::size_t>(k)] <= rect.hi[static_cast<std::size_t>(k)]) break;
      c[static_cast<std::size_t>(k)] = rect.lo[static_cast<std::size_t>(k)];
    }
    if (k == rect.dim()) break;
  }
  return cells;
}

// Cost of a partition by the definition: per nonempty leaf, squared error
// about the mean of the observed entries, plus lambda per leaf.
inline double partition_cost(const std::vector<Rectangle>& partition, const LatticeShape& shape,
                             const std::vector<double>& y, const std::vector<char>& observed,
                             double lambda) {
  double total = lambda * static_cast<double>(partition.size());
  for (const Rectangle& rect : partition) {
    double sum = 0.0;
    int count = 0;
    for (std::int64_t cell : cells_of(rect, shape)) {
      if (observed[static_cast<std::size_t>(cell)]) {
        sum += y[static_cast<std::size_t>(cell)];
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / count;
    for (std::int64_t cell : cells_of(rect, shape)) {
      if (observed[static_cast<std::size_t>(cell)]) {
        const double d = y[static_cast<std::size_t>(cell)] - mean;
        total += d * d;
      }
    }
  }
  return total;
}

inline double brute_force_min_cost(const LatticeShape& shape, const std::vector<double>& y,
                                   const std::vector<char>& observed, double lambda) {
  const auto partitions = enumerate_rdps(Rectangle::full(shape));
  double best = 0.0;
  bool first = true;
  for (const auto& partition : partitions) {
    const double cost = partition_cost(partition, shape, y, observed, lambda);
    if (first || cost < best) {
      best = cost;
      first = false;
    }
  }
  return best;
}

// Degree-d least squares polynomial fit of y against t_i = (i+1)/n,
// evaluated back on the same grid. Normal equations with partial pivoting.
inline std::vector<double> polynomial_ls_fit(const std::vector<double>& y, int degree) {
  const std::size_t n = y.size();
  const int m = degree + 1;
  std::vector<std::vector<double>> a(static_cast<std::size_t>(m),
                                     std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) / static_cast<double>(n);
    std::vector<double> powers(static_cast<std::size_t>(m), 1.0);
    for (int k = 1; k < m; ++k) powers[static_cast<std::size_t>(k)] = powers[static_cast<std::size_t>(k - 1)] * t;
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c)
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +=
            powers[static_cast<std::size_t>(r)] * powers[static_cast<std::size_t>(c)];
      a[static_cast<std::size_t>(r)][static_cast<std::size_t>(m)] += powers[static_cast<std::size_t>(r)] * y[i];
    }
  }
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
          std::abs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
        pivot = r;
    std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                       a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
      for (int c = col; c <= m; ++c)
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
            f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
    }
  }
  std::vector<double> coef(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r)
    coef[static_cast<std::size_t>(r)] = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(m)] /
                                        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
  std::vector<double> fit(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) / static_cast<double>(n);
    double v = 0.0, p = 1.0;
    for (int k = 0; k < m; ++k) {
      v += coef[static_cast<std::size_t>(k)] * p;
      p *= t;
    }
    fit[i] = v;
  }
  return fit;
}

// Toy family: every fit is the constant mean of the available entries,
// shrunk by 1 / (1 + lambda).
struct MeanShrinkFamily {
  std::vector<double> full_fit(const std::vector<double>& y, double lambda) const {
    double sum = 0.0;
    for (double v : y) sum += v;
    return std::vector<double>(y.size(), sum / static_cast<double>(y.size()) / (1.0 + lambda));
  }

  std::vector<double> completion_fit(const std::vector<double>& y, const FoldAssignment& folds,
                                     int j, double lambda) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (folds.membership[i] != j) {
        sum += y[i];
        ++count;
      }
    }
    return std::vector<double>(y.size(), sum / static_cast<double>(count) / (1.0 + lambda));
  }
};

// Toy family with one fixed fit per grid value, independent of y.
struct FixedCandidateFamily {
  const LambdaGrid* grid = nullptr;
  std::vector<std::vector<double>> candidates;

  const std::vector<double>& candidate_for(double lambda) const {
    for (std::size_t g = 0; g < grid->size(); ++g)
      if (grid->values[g] == lambda) return candidates[g];
    throw std::invalid_argument("FixedCandidateFamily: lambda not on the grid");
  }

  std::vector<double> full_fit(const std::vector<double>&, double lambda) const {
    return candidate_for(lambda);
  }

  std::vector<double> completion_fit(const std::vector<double>&, const FoldAssignment&, int,
                                     double lambda) const {
    return candidate_for(lambda);
  }
};

inline bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace oracles
