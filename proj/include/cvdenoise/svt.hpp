#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cvdenoise/cvcore.hpp"

namespace cvdenoise {

// Singular value decomposition of a square matrix, singular values
// nonincreasing. U and V are stored column-major.
struct SvdFactorization {
  int n = 0;
  std::vector<double> s;
  std::vector<double> u;
  std::vector<double> v;

  std::vector<double> reconstruct_above(double threshold) const {
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
      const double sk = s[static_cast<std::size_t>(k)];
      if (!(sk > threshold)) continue;
      const double* uk = u.data() + static_cast<std::size_t>(k) * n;
      const double* vk = v.data() + static_cast<std::size_t>(k) * n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out[static_cast<std::size_t>(i) * n + j] += sk * uk[i] * vk[j];
    }
    return out;
  }
};

// One-sided Jacobi on the columns: rotate pairs until every pair is
// orthogonal to `tol` relative off-diagonal mass. Deterministic cyclic
// pair order, no external dependencies.
inline SvdFactorization jacobi_svd(const std::vector<double>& y, int n, double tol = 1e-10,
                                   int max_sweeps = 100) {
  if (n < 1 || y.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("jacobi_svd: matrix must be n x n");

  // Column-major working copy of the row-major input.
  std::vector<double> g(y.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g[static_cast<std::size_t>(j) * n + i] = y[static_cast<std::size_t>(i) * n + j];
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

  auto col = [&](std::vector<double>& m, int j) { return m.data() + static_cast<std::size_t>(j) * n; };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_off = 0.0;
    for (int q = 1; q < n; ++q) {
      for (int p = 0; p < q; ++p) {
        double* gp = col(g, p);
        double* gq = col(g, q);
        double a = 0.0, b = 0.0, c = 0.0;
        for (int i = 0; i < n; ++i) {
          a += gp[i] * gp[i];
          b += gq[i] * gq[i];
          c += gp[i] * gq[i];
        }
        if (a == 0.0 || b == 0.0) continue;
        const double off = std::abs(c) / std::sqrt(a * b);
        max_off = std::max(max_off, off);
        if (off <= tol) continue;
        const double tau = (b - a) / (2.0 * c);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        double* vp = col(v, p);
        double* vq = col(v, q);
        for (int i = 0; i < n; ++i) {
          const double gi = gp[i], gj = gq[i];
          gp[i] = cs * gi - sn * gj;
          gq[i] = sn * gi + cs * gj;
          const double vi = vp[i], vj = vq[i];
          vp[i] = cs * vi - sn * vj;
          vq[i] = sn * vi + cs * vj;
        }
      }
    }
    if (max_off <= tol) break;
  }

  SvdFactorization fact;
  fact.n = n;
  fact.s.resize(static_cast<std::size_t>(n));
  fact.u.assign(static_cast<std::size_t>(n) * n, 0.0);
  fact.v = std::move(v);
  for (int j = 0; j < n; ++j) {
    double norm = 0.0;
    const double* gj = col(g, j);
    for (int i = 0; i < n; ++i) norm += gj[i] * gj[i];
    norm = std::sqrt(norm);
    fact.s[static_cast<std::size_t>(j)] = norm;
    if (norm > 0.0)
      for (int i = 0; i < n; ++i) fact.u[static_cast<std::size_t>(j) * n + i] = gj[i] / norm;
  }

  // Descending singular values; stable under ties.
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    return fact.s[static_cast<std::size_t>(a)] > fact.s[static_cast<std::size_t>(b)];
  });
  SvdFactorization sorted;
  sorted.n = n;
  sorted.s.resize(static_cast<std::size_t>(n));
  sorted.u.resize(static_cast<std::size_t>(n) * n);
  sorted.v.resize(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    const int src = perm[static_cast<std::size_t>(k)];
    sorted.s[static_cast<std::size_t>(k)] = fact.s[static_cast<std::size_t>(src)];
    std::copy_n(fact.u.data() + static_cast<std::size_t>(src) * n, n,
                sorted.u.data() + static_cast<std::size_t>(k) * n);
    std::copy_n(fact.v.data() + static_cast<std::size_t>(src) * n, n,
                sorted.v.data() + static_cast<std::size_t>(k) * n);
  }
  return sorted;
}

struct SvtFit {
  std::vector<double> theta;  // row-major reconstruction
  std::vector<int> retained;  // indices into the sorted singular values
  int rank = 0;
};

inline SvtFit svt_from_svd(const SvdFactorization& fact, double lambda) {
  SvtFit fit;
  fit.theta = fact.reconstruct_above(lambda);
  for (int k = 0; k < fact.n; ++k)
    if (fact.s[static_cast<std::size_t>(k)] > lambda) fit.retained.push_back(k);
  fit.rank = static_cast<int>(fit.retained.size());
  return fit;
}

// Keeps only the singular triples whose singular value strictly exceeds
// lambda; ties at the threshold are dropped.
inline SvtFit svt(const std::vector<double>& y, int n, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("svt: lambda must be nonnegative");
  return svt_from_svd(jacobi_svd(y, n), lambda);
}

enum class FoldSide { kept, complement };

// 2 * Y o W (kept side) or 2 * Y o (1 - W): the unbiased masked inputs of
// the CV construction.
inline std::vector<double> zero_double(const std::vector<double>& y, const std::vector<double>& w,
                                       FoldSide side) {
  if (y.size() != w.size()) throw std::invalid_argument("zero_double: shape mismatch");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] != 0.0 && w[i] != 1.0) throw std::invalid_argument("zero_double: mask must be 0/1");
    const double keep = side == FoldSide::kept ? w[i] : 1.0 - w[i];
    out[i] = 2.0 * y[i] * keep;
  }
  return out;
}

// Family over matrix entries. One SVD per distinct masked input is cached
// and reused across the lambda grid; instances are not thread-safe.
struct SvtFamily {
  int side_length = 0;

  struct Cache {
    bool valid = false;
    std::vector<double> input;
    SvdFactorization fact;
  };
  mutable Cache full_cache;
  mutable std::vector<Cache> fold_caches;

  const SvdFactorization& factorization_for(Cache& cache, std::vector<double> input) const {
    if (!cache.valid || cache.input != input) {
      cache.fact = jacobi_svd(input, side_length);
      cache.input = std::move(input);
      cache.valid = true;
    }
    return cache.fact;
  }

  std::vector<double> full_fit(const std::vector<double>& y, double lambda) const {
    return svt_from_svd(factorization_for(full_cache, y), lambda).theta;
  }

  std::vector<double> completion_fit(const std::vector<double>& y, const FoldAssignment& folds,
                                     int j, double lambda) const {
    if (fold_caches.size() < static_cast<std::size_t>(folds.fold_count))
      fold_caches.resize(static_cast<std::size_t>(folds.fold_count));
    std::vector<double> masked(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      masked[i] = folds.membership[i] != j ? 2.0 * y[i] : 0.0;
    return svt_from_svd(factorization_for(fold_caches[static_cast<std::size_t>(j)], std::move(masked)),
                        lambda)
        .theta;
  }
};

// CVSVT: two entrywise Bernoulli folds, zero-doubled completion inputs,
// final thresholding of the unmasked matrix at the selected lambda.
inline CvResult cvsvt(const std::vector<double>& y, int n, const LambdaGrid& grid,
                      std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("cvsvt: need n >= 2");
  if (y.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("cvsvt: matrix must be n x n");
  SvtFamily family;
  family.side_length = n;
  CvConfig config;
  config.scheme = FoldScheme::bernoulli;
  config.grid = grid;
  config.seed = seed;
  return run_cv(family, y, config);
}

}  // namespace cvdenoise
