#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cvdenoise/banded.hpp"
#include "cvdenoise/cvcore.hpp"
#include "cvdenoise/numeric.hpp"

namespace cvdenoise {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct TfConfig {
  int order = 1;
  int max_iterations = 20000;
  double residual_tol = 1e-8;  // scaled by sqrt(n)
  double kkt_tol = 1e-6;
  double rho = 1.0;
};

struct TfFit {
  std::vector<double> fitted;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<double> objective_trace;  // best objective seen after each iteration
};

// D^(r): r-fold composition of adjacent differences.
inline std::vector<double> diff(const std::vector<double>& theta, int order) {
  return apply_diff(theta, order);
}

// r-th order total variation, n^(r-1) * ||D^(r) theta||_1.
inline double tv_r(const std::vector<double>& theta, int order) {
  const auto d = apply_diff(theta, order);
  KahanSum acc;
  for (double x : d) acc.add(std::abs(x));
  return std::pow(static_cast<double>(theta.size()), order - 1) * acc.value();
}

namespace detail {

inline double tf_objective(const std::vector<double>& y, const std::vector<double>& theta,
                           double gamma, int order) {
  KahanSum fidelity;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - theta[i];
    fidelity.add(d * d);
  }
  KahanSum penalty;
  for (double x : apply_diff(theta, order)) penalty.add(std::abs(x));
  return 0.5 * fidelity.value() + gamma * penalty.value();
}

}  // namespace detail

// Solver-independent optimality certificate. Reconstructs the least-squares
// dual v from y - theta = gamma * D^T v and reports the largest violation of
// stationarity, |v| <= 1, and the sign condition on active differences.
inline double tf_kkt_residual(const std::vector<double>& y, const std::vector<double>& theta,
                              double lambda, int order) {
  const std::size_t n = y.size();
  if (theta.size() != n) throw std::invalid_argument("tf_kkt_residual: size mismatch");
  const double gamma = lambda * std::pow(static_cast<double>(n), order - 1);
  const double y_scale = 1.0 + max_abs(y);
  if (gamma == 0.0) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(y[i] - theta[i]));
    return m / y_scale;
  }

  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = y[i] - theta[i];

  std::vector<int> all_rows(n - static_cast<std::size_t>(order));
  for (std::size_t k = 0; k < all_rows.size(); ++k) all_rows[k] = static_cast<int>(k);
  BandedCholesky ddt(gram_rows_band(all_rows, order), all_rows.size());
  std::vector<double> v = ddt.solve(apply_diff(g, order));
  for (double& x : v) x /= gamma;

  const auto dtv = apply_diff_transpose(v, order, n);
  double stationarity = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    stationarity = std::max(stationarity, std::abs(g[i] - gamma * dtv[i]));
  stationarity /= y_scale;

  double feasibility = 0.0;
  for (double x : v) feasibility = std::max(feasibility, std::abs(x) - 1.0);

  const auto dtheta = apply_diff(theta, order);
  const double active_tol = 1e-6 * (1.0 + max_abs(dtheta));
  double sign_violation = 0.0;
  for (std::size_t k = 0; k < dtheta.size(); ++k) {
    if (std::abs(dtheta[k]) > active_tol) {
      const double target = dtheta[k] > 0.0 ? 1.0 : -1.0;
      sign_violation = std::max(sign_violation, std::abs(v[k] - target));
    }
  }
  return std::max({stationarity, feasibility, sign_violation});
}

namespace detail {

// Given a candidate active set (nonzero differences with their signs),
// solves the corresponding equality-constrained least squares exactly.
// Returns false if the construction contradicts itself (flipped sign or an
// infeasible implied dual).
inline bool tf_polish(const std::vector<double>& y, double gamma, int order,
                      const std::vector<int>& active_rows, const std::vector<double>& active_signs,
                      std::vector<double>& theta_out) {
  const std::size_t n = y.size();
  const std::size_t rows = n - static_cast<std::size_t>(order);

  std::vector<double> sparse(rows, 0.0);
  for (std::size_t a = 0; a < active_rows.size(); ++a)
    sparse[static_cast<std::size_t>(active_rows[a])] = active_signs[a];
  std::vector<double> w = apply_diff_transpose(sparse, order, n);
  for (std::size_t i = 0; i < n; ++i) w[i] = y[i] - gamma * w[i];

  std::vector<int> zero_rows;
  zero_rows.reserve(rows - active_rows.size());
  {
    std::size_t a = 0;
    for (std::size_t k = 0; k < rows; ++k) {
      if (a < active_rows.size() && active_rows[a] == static_cast<int>(k)) {
        ++a;
      } else {
        zero_rows.push_back(static_cast<int>(k));
      }
    }
  }

  std::vector<double> theta;
  std::vector<double> mu;
  if (zero_rows.empty()) {
    theta = w;
  } else {
    std::vector<double> rhs(zero_rows.size(), 0.0);
    {
      const auto coeff = diff_stencil(order);
      for (std::size_t p = 0; p < zero_rows.size(); ++p) {
        double v = 0.0;
        for (int l = 0; l <= order; ++l)
          v += coeff[static_cast<std::size_t>(l)] * w[static_cast<std::size_t>(zero_rows[p] + l)];
        rhs[p] = v;
      }
    }
    BandedCholesky chol(gram_rows_band(zero_rows, order), zero_rows.size());
    mu = chol.solve(rhs);

    std::vector<double> spread(rows, 0.0);
    for (std::size_t p = 0; p < zero_rows.size(); ++p)
      spread[static_cast<std::size_t>(zero_rows[p])] = mu[p];
    const auto correction = apply_diff_transpose(spread, order, n);
    theta = w;
    for (std::size_t i = 0; i < n; ++i) theta[i] -= correction[i];

    // Implied dual on the zero set must stay inside [-1, 1].
    for (double m : mu)
      if (std::abs(m) > gamma * (1.0 + 1e-9)) return false;
  }

  // Active differences must not flip against their assumed signs.
  const auto dtheta = apply_diff(theta, order);
  for (std::size_t a = 0; a < active_rows.size(); ++a) {
    const double v = dtheta[static_cast<std::size_t>(active_rows[a])];
    if (v * active_signs[a] < -1e-9 * (1.0 + max_abs(dtheta))) return false;
  }

  theta_out = std::move(theta);
  return true;
}

}  // namespace detail

// Penalized trend filtering: minimizes
//   0.5 * ||y - theta||^2 + lambda * n^(r-1) * ||D^(r) theta||_1
// by ADMM on (theta, z = D theta) with exact banded theta-updates, residual
// balancing on rho, and an active-set polish that snaps to the exact
// solution once the support settles. Success is certified by the
// independent KKT residual, never the solver's internal state.
inline TfFit tf_solve(const std::vector<double>& y, double lambda, int order,
                      const TfConfig& config = {}) {
  const std::size_t n = y.size();
  if (order < 1) throw std::invalid_argument("tf_solve: order must be >= 1");
  if (n <= static_cast<std::size_t>(order))
    throw std::invalid_argument("tf_solve: need more points than the order");
  if (lambda < 0.0) throw std::invalid_argument("tf_solve: lambda must be nonnegative");

  const double gamma = lambda * std::pow(static_cast<double>(n), order - 1);
  TfFit fit;
  if (gamma == 0.0) {
    fit.fitted = y;
    fit.objective = 0.0;
    fit.kkt_residual = 0.0;
    return fit;
  }

  const std::size_t rows = n - static_cast<std::size_t>(order);
  double rho = config.rho;
  BandedCholesky factor(identity_plus_gram_band(rho, order, n), n);

  std::vector<double> z(rows, 0.0), u(rows, 0.0);
  std::vector<double> best_theta = y;
  double best_objective = detail::tf_objective(y, best_theta, gamma, order);
  const double res_tol = config.residual_tol * std::sqrt(static_cast<double>(n));

  std::vector<int> last_polish_rows{-2};  // sentinel distinct from any real set

  auto try_polish = [&](const std::vector<double>& z_ref) -> bool {
    std::vector<int> active_rows;
    std::vector<double> active_signs;
    for (std::size_t k = 0; k < rows; ++k) {
      if (z_ref[k] != 0.0) {
        active_rows.push_back(static_cast<int>(k));
        active_signs.push_back(z_ref[k] > 0.0 ? 1.0 : -1.0);
      }
    }
    if (active_rows == last_polish_rows) return false;
    last_polish_rows = active_rows;
    std::vector<double> theta;
    if (!detail::tf_polish(y, gamma, order, active_rows, active_signs, theta)) return false;
    const double kkt = tf_kkt_residual(y, theta, lambda, order);
    if (kkt > config.kkt_tol) return false;
    const double obj = detail::tf_objective(y, theta, gamma, order);
    if (obj > best_objective + 1e-9 * (1.0 + std::abs(best_objective))) return false;
    best_theta = std::move(theta);
    best_objective = obj;
    fit.kkt_residual = kkt;
    return true;
  };

  std::vector<double> rhs(n), theta(n), dtheta, z_old;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    fit.iterations = iter;

    const auto dtu = apply_diff_transpose([&] {
      std::vector<double> t(rows);
      for (std::size_t k = 0; k < rows; ++k) t[k] = z[k] - u[k];
      return t;
    }(), order, n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = y[i] + rho * dtu[i];
    theta = factor.solve(rhs);

    dtheta = apply_diff(theta, order);
    z_old = z;
    for (std::size_t k = 0; k < rows; ++k) z[k] = soft_threshold(dtheta[k] + u[k], gamma / rho);

    double primal = 0.0, dual = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      const double pr = dtheta[k] - z[k];
      primal += pr * pr;
      const double dz = z[k] - z_old[k];
      dual += dz * dz;
      u[k] += pr;
    }
    primal = std::sqrt(primal);
    {
      std::vector<double> dd(rows);
      for (std::size_t k = 0; k < rows; ++k) dd[k] = z[k] - z_old[k];
      const auto dt = apply_diff_transpose(dd, order, n);
      double s = 0.0;
      for (double x : dt) s += x * x;
      dual = rho * std::sqrt(s);
    }

    const double obj = detail::tf_objective(y, theta, gamma, order);
    if (obj < best_objective) {
      best_objective = obj;
      best_theta = theta;
    }
    fit.objective_trace.push_back(best_objective);

    const bool converged = primal <= res_tol && dual <= res_tol;
    if (converged || iter % 25 == 0) {
      if (try_polish(z)) {
        fit.fitted = best_theta;
        fit.objective = best_objective;
        return fit;
      }
      if (converged) {
        const double kkt = tf_kkt_residual(y, best_theta, lambda, order);
        if (kkt <= config.kkt_tol) {
          fit.fitted = best_theta;
          fit.objective = best_objective;
          fit.kkt_residual = kkt;
          return fit;
        }
      }
    }

    if (iter % 20 == 0) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        for (double& x : u) x *= 0.5;
        factor = BandedCholesky(identity_plus_gram_band(rho, order, n), n);
        last_polish_rows.assign(1, -2);
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        for (double& x : u) x *= 2.0;
        factor = BandedCholesky(identity_plus_gram_band(rho, order, n), n);
        last_polish_rows.assign(1, -2);
      }
    }
  }

  const double kkt = tf_kkt_residual(y, best_theta, lambda, order);
  if (kkt <= config.kkt_tol) {
    fit.fitted = best_theta;
    fit.objective = best_objective;
    fit.kkt_residual = kkt;
    return fit;
  }
  throw SolverError("tf_solve: no KKT-certified solution within " +
                        std::to_string(config.max_iterations) +
                        " iterations (residual " + std::to_string(kkt) + ")",
                    kkt);
}

// Fills fold j by r-th order polynomial extrapolation from the right
// neighbors, falling back to the left neighbors at the tail. With K = r + 1
// interleaved folds every source index lies outside fold j, which is
// asserted rather than assumed.
inline std::vector<double> interpolate(const std::vector<double>& y, const FoldAssignment& folds,
                                       int j, int order) {
  const std::size_t n = y.size();
  const int k = folds.fold_count;
  if (folds.scheme != FoldScheme::interleaved || k != order + 1)
    throw std::invalid_argument("interpolate: need K = r + 1 interleaved folds");
  if (folds.size() != n) throw std::invalid_argument("interpolate: fold size mismatch");
  if (n < 3 * static_cast<std::size_t>(k))
    throw std::invalid_argument("interpolate: need n >= 3K");

  std::vector<double> binom(static_cast<std::size_t>(order) + 1, 0.0);
  binom[0] = 1.0;
  for (int l = 1; l <= order; ++l)
    binom[static_cast<std::size_t>(l)] = binom[static_cast<std::size_t>(l - 1)] * (order - l + 1) / l;

  std::vector<double> out(y);
  for (int i : folds.fold(j)) {
    const int pos = i + 1;  // 1-based position in the formulas
    double v = 0.0;
    const int dir = pos + order <= static_cast<int>(n) ? 1 : -1;
    for (int l = 1; l <= order; ++l) {
      const int src = i + dir * l;
      if (src < 0 || src >= static_cast<int>(n))
        throw std::logic_error("interpolate: source index out of range");
      if (folds.membership[static_cast<std::size_t>(src)] == j)
        throw std::logic_error("interpolate: source index falls inside the fold");
      const double sign = (l % 2 == 1) ? 1.0 : -1.0;
      v += sign * binom[static_cast<std::size_t>(l)] * y[static_cast<std::size_t>(src)];
    }
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

// Completion estimator: trend filtering run on the interpolated series, so
// the result depends on y only through the entries outside fold j.
inline TfFit tf_completion(const std::vector<double>& y, const FoldAssignment& folds, int j,
                           double lambda, int order, const TfConfig& config = {}) {
  return tf_solve(interpolate(y, folds, j, order), lambda, order, config);
}

struct TfFamily {
  int order = 1;
  TfConfig config;

  std::vector<double> full_fit(const std::vector<double>& y, double lambda) const {
    return tf_solve(y, lambda, order, config).fitted;
  }

  std::vector<double> completion_fit(const std::vector<double>& y, const FoldAssignment& folds,
                                     int j, double lambda) const {
    return tf_completion(y, folds, j, lambda, order, config).fitted;
  }
};

// CVTF: K = r + 1 interleaved folds, interpolation completions, final fit on
// the full series at the selected lambda.
inline CvResult cvtf(const std::vector<double>& y, int order, const LambdaGrid& grid,
                     const TfConfig& config = {}) {
  if (order < 1 || order > 4) throw std::invalid_argument("cvtf: order must be in [1, 4]");
  if (y.size() < 3 * (static_cast<std::size_t>(order) + 1))
    throw std::invalid_argument("cvtf: need n >= 3(r + 1)");
  TfFamily family{order, config};
  family.config.order = order;
  CvConfig cv;
  cv.scheme = FoldScheme::interleaved;
  cv.folds = order + 1;
  cv.grid = grid;
  return run_cv(family, y, cv);
}

struct HBlockNorms {
  double a = 0.0;
  double a_transpose = 0.0;
  double b = 0.0;
  double b_transpose = 0.0;
};

namespace detail {

inline double operator_norm(const std::vector<std::vector<double>>& m) {
  const std::size_t rows = m.size();
  const std::size_t cols = m[0].size();
  std::vector<double> x(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
  double sigma2 = 0.0;
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> mx(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t c = 0; c < cols; ++c) mx[i] += m[i][c] * x[c];
    std::vector<double> mtmx(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t c = 0; c < cols; ++c) mtmx[c] += m[i][c] * mx[i];
    double norm = 0.0;
    for (double v : mtmx) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    const double prev = sigma2;
    sigma2 = norm;
    for (std::size_t c = 0; c < cols; ++c) x[c] = mtmx[c] / norm;
    if (it > 10 && std::abs(sigma2 - prev) <= 1e-14 * sigma2) break;
  }
  return std::sqrt(sigma2);
}

inline std::vector<std::vector<double>> transpose(const std::vector<std::vector<double>>& m) {
  std::vector<std::vector<double>> t(m[0].size(), std::vector<double>(m.size(), 0.0));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) t[j][i] = m[i][j];
  return t;
}

}  // namespace detail

// Numerical operator norms of the two block types appearing in the matrix
// that maps the retained entries to the interpolated series: A stacks the
// extrapolation row on an identity, B additionally closes with the mirrored
// row for the left-extrapolated tail.
inline HBlockNorms h_block_norms(int order) {
  if (order < 1 || order > 4) throw std::invalid_argument("h_block_norms: order must be in [1, 4]");
  std::vector<double> binom(static_cast<std::size_t>(order) + 1, 0.0);
  binom[0] = 1.0;
  for (int l = 1; l <= order; ++l)
    binom[static_cast<std::size_t>(l)] = binom[static_cast<std::size_t>(l - 1)] * (order - l + 1) / l;

  std::vector<double> extrapolation_row(static_cast<std::size_t>(order));
  for (int l = 1; l <= order; ++l)
    extrapolation_row[static_cast<std::size_t>(l - 1)] =
        ((l % 2 == 1) ? 1.0 : -1.0) * binom[static_cast<std::size_t>(l)];

  std::vector<std::vector<double>> a(static_cast<std::size_t>(order) + 1,
                                     std::vector<double>(static_cast<std::size_t>(order), 0.0));
  a[0] = extrapolation_row;
  for (int i = 1; i <= order; ++i) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i - 1)] = 1.0;

  std::vector<std::vector<double>> b(static_cast<std::size_t>(order) + 2,
                                     std::vector<double>(static_cast<std::size_t>(order), 0.0));
  b[0] = extrapolation_row;
  for (int i = 1; i <= order; ++i) b[static_cast<std::size_t>(i)][static_cast<std::size_t>(i - 1)] = 1.0;
  for (int c = 0; c < order; ++c)
    b[static_cast<std::size_t>(order) + 1][static_cast<std::size_t>(c)] =
        extrapolation_row[static_cast<std::size_t>(order - 1 - c)];

  HBlockNorms norms;
  norms.a = detail::operator_norm(a);
  norms.a_transpose = detail::operator_norm(detail::transpose(a));
  norms.b = detail::operator_norm(b);
  norms.b_transpose = detail::operator_norm(detail::transpose(b));
  return norms;
}

}  // namespace cvdenoise
