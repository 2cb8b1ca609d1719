#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvdenoise/numeric.hpp"
#include "cvdenoise/rng.hpp"

namespace cvdenoise {

enum class FoldScheme { interleaved, bernoulli };

// Partition of the index set {0,...,n-1} into K disjoint nonempty folds.
struct FoldAssignment {
  FoldScheme scheme = FoldScheme::interleaved;
  int fold_count = 0;
  std::vector<int> membership;          // index -> fold id in [0, K)
  std::vector<std::vector<int>> folds;  // fold id -> ascending indices

  std::size_t size() const { return membership.size(); }

  const std::vector<int>& fold(int j) const {
    if (j < 0 || j >= fold_count) throw std::invalid_argument("FoldAssignment: bad fold id");
    return folds[j];
  }

  std::vector<int> complement(int j) const {
    if (j < 0 || j >= fold_count) throw std::invalid_argument("FoldAssignment: bad fold id");
    std::vector<int> out;
    out.reserve(size() - folds[j].size());
    for (std::size_t i = 0; i < membership.size(); ++i)
      if (membership[i] != j) out.push_back(static_cast<int>(i));
    return out;
  }

  static FoldAssignment from_membership(std::vector<int> membership, int k, FoldScheme scheme) {
    FoldAssignment fa;
    fa.scheme = scheme;
    fa.fold_count = k;
    fa.membership = std::move(membership);
    fa.folds.assign(k, {});
    for (std::size_t i = 0; i < fa.membership.size(); ++i) {
      const int j = fa.membership[i];
      if (j < 0 || j >= k) throw std::invalid_argument("FoldAssignment: fold id out of range");
      fa.folds[j].push_back(static_cast<int>(i));
    }
    for (const auto& f : fa.folds)
      if (f.empty()) throw std::invalid_argument("FoldAssignment: empty fold");
    return fa;
  }
};

// Fold j (0-based) holds every index congruent to j modulo K, so points K
// apart land in the same fold.
inline FoldAssignment interleaved_folds(std::size_t n, int k) {
  if (k < 2) throw std::invalid_argument("interleaved_folds: need K >= 2");
  if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("interleaved_folds: need n >= K");
  std::vector<int> membership(n);
  for (std::size_t i = 0; i < n; ++i) membership[i] = static_cast<int>(i % k);
  return FoldAssignment::from_membership(std::move(membership), k, FoldScheme::interleaved);
}

// Two folds from i.i.d. Bernoulli(1/2) assignments. If a draw leaves a fold
// empty, redraw from a derived seed; at most 64 attempts.
inline FoldAssignment bernoulli_folds(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("bernoulli_folds: need at least 2 indices");
  for (int attempt = 0; attempt < 64; ++attempt) {
    CounterRng rng(CounterRng::derive(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<int> membership(n);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in_first = rng.next_bernoulli();
      membership[i] = in_first ? 0 : 1;
      ones += in_first ? 1 : 0;
    }
    if (ones == 0 || ones == n) continue;
    return FoldAssignment::from_membership(std::move(membership), 2, FoldScheme::bernoulli);
  }
  throw std::runtime_error("bernoulli_folds: degenerate partition after 64 redraws");
}

// Finite increasing grid of positive tuning values.
struct LambdaGrid {
  std::vector<double> values;

  LambdaGrid() = default;
  explicit LambdaGrid(std::vector<double> v) : values(std::move(v)) {
    if (values.empty()) throw std::invalid_argument("LambdaGrid: empty");
    double prev = 0.0;
    for (double x : values) {
      if (!(x > prev)) throw std::invalid_argument("LambdaGrid: values must be positive and strictly increasing");
      prev = x;
    }
  }

  std::size_t size() const { return values.size(); }
};

// {2^0, 2^1, ..., 2^{N*}} with N* = ceil(log2 N).
inline LambdaGrid default_grid(std::int64_t total_count) {
  if (total_count < 2) throw std::invalid_argument("default_grid: need N >= 2");
  int exponent = 0;
  while ((std::int64_t{1} << exponent) < total_count) ++exponent;
  std::vector<double> values(static_cast<std::size_t>(exponent) + 1);
  for (int k = 0; k <= exponent; ++k) values[static_cast<std::size_t>(k)] = std::ldexp(1.0, k);
  return LambdaGrid(std::move(values));
}

inline LambdaGrid grid_from_exponent(int exponent) {
  if (exponent < 0) throw std::invalid_argument("grid_from_exponent: need N* >= 0");
  std::vector<double> values(static_cast<std::size_t>(exponent) + 1);
  for (int k = 0; k <= exponent; ++k) values[static_cast<std::size_t>(k)] = std::ldexp(1.0, k);
  return LambdaGrid(std::move(values));
}

// A tuning family exposes a fit on the full data and a completion fit whose
// output may depend on y only through the entries outside fold j.
template <typename F>
concept EstimatorFamilyFor = requires(const F& f, const std::vector<double>& y,
                                      const FoldAssignment& folds, int j, double lambda) {
  { f.full_fit(y, lambda) } -> std::same_as<std::vector<double>>;
  { f.completion_fit(y, folds, j, lambda) } -> std::same_as<std::vector<double>>;
};

// Total squared prediction error of `fit` against `y` on fold j.
inline double cv_error(const std::vector<double>& y, const std::vector<double>& fit,
                       int j, const FoldAssignment& folds) {
  if (y.size() != fit.size() || y.size() != folds.size())
    throw std::invalid_argument("cv_error: shape mismatch");
  KahanSum acc;
  for (int i : folds.fold(j)) {
    const double d = y[static_cast<std::size_t>(i)] - fit[static_cast<std::size_t>(i)];
    acc.add(d * d);
  }
  return acc.value();
}

struct FoldSelection {
  double lambda = 0.0;
  std::vector<double> errors;  // CV error per grid value, grid order
  std::vector<double> fit;     // completion fit at the selected lambda
};

// Argmin of the fold-j prediction error over the grid; ties go to the
// smallest lambda. Estimator failures are rethrown with the offending
// lambda attached.
template <EstimatorFamilyFor F>
FoldSelection select_fold_lambda(const F& family, const std::vector<double>& y,
                                 const FoldAssignment& folds, int j, const LambdaGrid& grid) {
  FoldSelection sel;
  sel.errors.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double lambda = grid.values[g];
    std::vector<double> fit;
    try {
      fit = family.completion_fit(y, folds, j, lambda);
    } catch (const std::exception& e) {
      throw std::runtime_error("completion fit failed at lambda=" + std::to_string(lambda) +
                               ": " + e.what());
    }
    const double err = cv_error(y, fit, j, folds);
    sel.errors.push_back(err);
    if (g == 0 || err < sel.errors[best]) {
      best = g;
      sel.fit = std::move(fit);
    }
  }
  sel.lambda = grid.values[best];
  return sel;
}

// Splices the per-fold completion fits: the result restricted to fold j is
// the completion fit at that fold's selected lambda.
template <EstimatorFamilyFor F>
std::vector<double> assemble_intermediate(const F& family, const std::vector<double>& y,
                                          const FoldAssignment& folds,
                                          const std::vector<double>& fold_lambdas) {
  if (fold_lambdas.size() != static_cast<std::size_t>(folds.fold_count))
    throw std::invalid_argument("assemble_intermediate: need one lambda per fold");
  std::vector<double> intermediate(y.size(), 0.0);
  for (int j = 0; j < folds.fold_count; ++j) {
    std::vector<double> fit;
    try {
      fit = family.completion_fit(y, folds, j, fold_lambdas[static_cast<std::size_t>(j)]);
    } catch (const std::exception& e) {
      throw std::runtime_error("completion fit failed at lambda=" +
                               std::to_string(fold_lambdas[static_cast<std::size_t>(j)]) + ": " +
                               e.what());
    }
    for (int i : folds.fold(j)) intermediate[static_cast<std::size_t>(i)] = fit[static_cast<std::size_t>(i)];
  }
  return intermediate;
}

struct FinalSelection {
  double lambda = 0.0;
  std::vector<double> fit;
  std::vector<double> distances;  // squared distance to the intermediate fit, grid order
};

// Argmin over the grid of the squared distance between the full-data fit and
// the intermediate fit; ties go to the smallest lambda.
template <EstimatorFamilyFor F>
FinalSelection select_final_lambda(const F& family, const std::vector<double>& y,
                                   const std::vector<double>& intermediate, const LambdaGrid& grid) {
  FinalSelection sel;
  sel.distances.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double lambda = grid.values[g];
    std::vector<double> fit;
    try {
      fit = family.full_fit(y, lambda);
    } catch (const std::exception& e) {
      throw std::runtime_error("full fit failed at lambda=" + std::to_string(lambda) + ": " +
                               e.what());
    }
    const double dist = squared_distance(fit, intermediate);
    sel.distances.push_back(dist);
    if (g == 0 || dist < sel.distances[best]) {
      best = g;
      sel.fit = std::move(fit);
    }
  }
  sel.lambda = grid.values[best];
  return sel;
}

struct CvConfig {
  FoldScheme scheme = FoldScheme::bernoulli;
  int folds = 2;  // used by the interleaved scheme
  LambdaGrid grid;
  std::uint64_t seed = 0;  // used by the bernoulli scheme
};

struct CvResult {
  LambdaGrid grid;
  FoldAssignment folds;
  std::vector<double> fold_lambdas;
  std::vector<std::vector<double>> fold_errors;
  std::vector<double> intermediate;
  double final_lambda = 0.0;
  std::vector<double> final_fit;
  std::vector<double> final_distances;
};

// The full pipeline: build folds, select a lambda per fold, splice the
// intermediate fit, then pick the final lambda against it.
template <EstimatorFamilyFor F>
CvResult run_cv(const F& family, const std::vector<double>& y, const CvConfig& config) {
  CvResult result;
  result.grid = config.grid;

  try {
    result.folds = config.scheme == FoldScheme::interleaved
                       ? interleaved_folds(y.size(), config.folds)
                       : bernoulli_folds(y.size(), config.seed);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("fold construction: ") + e.what());
  }

  for (int j = 0; j < result.folds.fold_count; ++j) {
    FoldSelection sel;
    try {
      sel = select_fold_lambda(family, y, result.folds, j, config.grid);
    } catch (const std::exception& e) {
      throw std::runtime_error("fold selection (fold " + std::to_string(j + 1) + "): " + e.what());
    }
    result.fold_lambdas.push_back(sel.lambda);
    result.fold_errors.push_back(std::move(sel.errors));
  }

  try {
    result.intermediate = assemble_intermediate(family, y, result.folds, result.fold_lambdas);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("intermediate assembly: ") + e.what());
  }

  FinalSelection fin;
  try {
    fin = select_final_lambda(family, y, result.intermediate, config.grid);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("final selection: ") + e.what());
  }
  result.final_lambda = fin.lambda;
  result.final_fit = std::move(fin.fit);
  result.final_distances = std::move(fin.distances);
  return result;
}

}  // namespace cvdenoise
