#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cvdenoise/cvcore.hpp"
#include "cvdenoise/numeric.hpp"
#include "cvdenoise/tfilter.hpp"  // SolverError

namespace cvdenoise {

struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  DesignMatrix() = default;
  DesignMatrix(std::size_t r, std::size_t c, std::vector<double> d)
      : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) throw std::invalid_argument("DesignMatrix: size mismatch");
  }

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct LassoConfig {
  int max_sweeps = 10000;
  double tol = 1e-9;  // on max coefficient change, relative to 1 + ||beta||_inf
};

struct LassoFit {
  std::vector<double> beta;
  std::vector<double> fitted;  // X beta over all rows
  double objective = 0.0;      // sum_{i in I} residual^2 + lambda * ||beta||_1
  int sweeps = 0;
  std::vector<int> skipped_columns;      // all-zero columns frozen at 0
  std::vector<double> objective_trace;   // objective after each sweep
};

// Cyclic coordinate descent on
//   sum_{i in I} (y_i - x_i^t beta)^2 + lambda * ||beta||_1.
// The quadratic term carries no 1/2, so the soft-threshold level is
// lambda / 2. Coordinates are visited in natural column order.
inline LassoFit lasso_solve(const DesignMatrix& x, const std::vector<double>& y, double lambda,
                            const std::vector<int>& row_subset, const LassoConfig& config = {}) {
  if (y.size() != x.rows) throw std::invalid_argument("lasso_solve: y size mismatch");
  if (row_subset.empty()) throw std::invalid_argument("lasso_solve: empty row subset");
  if (lambda < 0.0) throw std::invalid_argument("lasso_solve: lambda must be nonnegative");
  for (int i : row_subset)
    if (i < 0 || static_cast<std::size_t>(i) >= x.rows)
      throw std::invalid_argument("lasso_solve: row index out of range");

  const std::size_t p = x.cols;
  LassoFit fit;
  fit.beta.assign(p, 0.0);

  std::vector<double> column_sq(p, 0.0);
  for (int i : row_subset)
    for (std::size_t j = 0; j < p; ++j) {
      const double v = x.at(static_cast<std::size_t>(i), j);
      column_sq[j] += v * v;
    }
  for (std::size_t j = 0; j < p; ++j)
    if (column_sq[j] == 0.0) fit.skipped_columns.push_back(static_cast<int>(j));

  // Residuals on the active rows.
  std::vector<double> residual;
  residual.reserve(row_subset.size());
  for (int i : row_subset) residual.push_back(y[static_cast<std::size_t>(i)]);

  auto current_objective = [&]() {
    KahanSum obj;
    for (double r : residual) obj.add(r * r);
    for (double b : fit.beta) obj.add(lambda * std::abs(b));
    return obj.value();
  };

  bool converged = false;
  double max_delta = 0.0;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    fit.sweeps = sweep;
    max_delta = 0.0;
    double beta_scale = 1.0;
    for (double b : fit.beta) beta_scale = std::max(beta_scale, 1.0 + std::abs(b));
    for (std::size_t j = 0; j < p; ++j) {
      if (column_sq[j] == 0.0) continue;
      double rho = 0.0;
      for (std::size_t t = 0; t < residual.size(); ++t) {
        const double v = x.at(static_cast<std::size_t>(row_subset[t]), j);
        rho += v * (residual[t] + v * fit.beta[j]);
      }
      const double updated = soft_threshold(rho, lambda / 2.0) / column_sq[j];
      const double delta = updated - fit.beta[j];
      if (delta != 0.0) {
        for (std::size_t t = 0; t < residual.size(); ++t)
          residual[t] -= x.at(static_cast<std::size_t>(row_subset[t]), j) * delta;
        fit.beta[j] = updated;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    fit.objective_trace.push_back(current_objective());
    if (max_delta <= config.tol * beta_scale) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SolverError("lasso_solve: no convergence within " + std::to_string(config.max_sweeps) +
                          " sweeps (last max coefficient change " + std::to_string(max_delta) + ")",
                      max_delta);

  fit.objective = current_objective();
  fit.fitted.assign(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < p; ++j) v += x.at(i, j) * fit.beta[j];
    fit.fitted[i] = v;
  }
  return fit;
}

inline std::vector<int> all_rows(std::size_t n) {
  std::vector<int> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
  return rows;
}

// Family over fitted values: completion fits solve the lasso restricted to
// the rows outside fold j and predict on every row.
struct LassoFamily {
  const DesignMatrix* design = nullptr;
  LassoConfig config;

  std::vector<double> full_fit(const std::vector<double>& y, double lambda) const {
    return lasso_solve(*design, y, lambda, all_rows(design->rows), config).fitted;
  }

  std::vector<double> completion_fit(const std::vector<double>& y, const FoldAssignment& folds,
                                     int j, double lambda) const {
    return lasso_solve(*design, y, lambda, folds.complement(j), config).fitted;
  }
};

struct CvLassoResult {
  std::vector<double> beta;
  CvResult cv;  // over fitted values
};

// CVLASSO: two Bernoulli row folds, selection in fitted-value space, final
// coefficients refit on all rows at the selected lambda.
inline CvLassoResult cvlasso(const DesignMatrix& x, const std::vector<double>& y,
                             const LambdaGrid& grid, std::uint64_t seed,
                             const LassoConfig& config = {}) {
  if (x.rows < 4) throw std::invalid_argument("cvlasso: need at least 4 rows");
  LassoFamily family{&x, config};
  CvConfig cv;
  cv.scheme = FoldScheme::bernoulli;
  cv.grid = grid;
  cv.seed = seed;
  CvLassoResult result;
  result.cv = run_cv(family, y, cv);
  result.beta = lasso_solve(x, y, result.cv.final_lambda, all_rows(x.rows), config).beta;
  return result;
}

}  // namespace cvdenoise
