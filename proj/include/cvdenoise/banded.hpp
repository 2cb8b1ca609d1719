#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cvdenoise {

// Symmetric positive definite band matrix, lower band storage:
// band[o][col] holds M(col + o, col) for offsets o = 0..bw.
class BandedCholesky {
 public:
  BandedCholesky(std::vector<std::vector<double>> band, std::size_t n)
      : band_(std::move(band)), n_(n) {
    factorize();
  }

  std::size_t size() const { return n_; }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    if (rhs.size() != n_) throw std::invalid_argument("BandedCholesky: rhs size mismatch");
    const std::size_t bw = band_.size() - 1;
    std::vector<double> x(rhs);
    // L z = rhs
    for (std::size_t j = 0; j < n_; ++j) {
      x[j] /= band_[0][j];
      const std::size_t last = std::min(n_ - 1, j + bw);
      for (std::size_t i = j + 1; i <= last; ++i) x[i] -= band_[i - j][j] * x[j];
    }
    // L^T x = z
    for (std::size_t j = n_; j-- > 0;) {
      const std::size_t last = std::min(n_ - 1, j + bw);
      for (std::size_t i = j + 1; i <= last; ++i) x[j] -= band_[i - j][j] * x[i];
      x[j] /= band_[0][j];
    }
    return x;
  }

 private:
  void factorize() {
    const std::size_t bw = band_.size() - 1;
    for (std::size_t j = 0; j < n_; ++j) {
      double diag = band_[0][j];
      const std::size_t first = j >= bw ? j - bw : 0;
      for (std::size_t k = first; k < j; ++k) {
        const double l = band_[j - k][k];
        diag -= l * l;
      }
      if (!(diag > 0.0)) throw std::runtime_error("BandedCholesky: matrix not positive definite");
      band_[0][j] = std::sqrt(diag);
      const std::size_t last = std::min(n_ - 1, j + bw);
      for (std::size_t i = j + 1; i <= last; ++i) {
        double v = band_[i - j][j];
        const std::size_t start = i >= bw ? i - bw : 0;
        for (std::size_t k = std::max(start, first); k < j; ++k) {
          if (i - k <= bw) v -= band_[i - k][k] * band_[j - k][k];
        }
        band_[i - j][j] = v / band_[0][j];
      }
    }
  }

  std::vector<std::vector<double>> band_;
  std::size_t n_;
};

// Stencil of the r-th order difference operator: row k of D^(r) is
// sum_l coeff[l] * x_{k+l} with coeff[l] = (-1)^(r-l) * C(r, l).
inline std::vector<double> diff_stencil(int order) {
  if (order < 1) throw std::invalid_argument("diff_stencil: order must be >= 1");
  std::vector<double> coeff(static_cast<std::size_t>(order) + 1);
  double binom = 1.0;
  for (int l = 0; l <= order; ++l) {
    coeff[static_cast<std::size_t>(l)] = ((order - l) % 2 == 0 ? binom : -binom);
    binom = binom * (order - l) / (l + 1);
  }
  return coeff;
}

inline std::vector<double> apply_diff(const std::vector<double>& x, int order) {
  const std::size_t n = x.size();
  if (n <= static_cast<std::size_t>(order))
    throw std::invalid_argument("apply_diff: need more points than the order");
  const auto coeff = diff_stencil(order);
  std::vector<double> out(n - static_cast<std::size_t>(order), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double v = 0.0;
    for (int l = 0; l <= order; ++l) v += coeff[static_cast<std::size_t>(l)] * x[k + static_cast<std::size_t>(l)];
    out[k] = v;
  }
  return out;
}

inline std::vector<double> apply_diff_transpose(const std::vector<double>& v, int order,
                                                std::size_t n) {
  const auto coeff = diff_stencil(order);
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k)
    for (int l = 0; l <= order; ++l) out[k + static_cast<std::size_t>(l)] += coeff[static_cast<std::size_t>(l)] * v[k];
  return out;
}

// Band of I + rho * D^T D (bandwidth = order).
inline std::vector<std::vector<double>> identity_plus_gram_band(double rho, int order,
                                                                std::size_t n) {
  const auto coeff = diff_stencil(order);
  const std::size_t rows = n - static_cast<std::size_t>(order);
  std::vector<std::vector<double>> band(static_cast<std::size_t>(order) + 1);
  for (int o = 0; o <= order; ++o) band[static_cast<std::size_t>(o)].assign(n - static_cast<std::size_t>(o), 0.0);
  for (int o = 0; o <= order; ++o) {
    for (std::size_t col = 0; col + static_cast<std::size_t>(o) < n; ++col) {
      const std::size_t row = col + static_cast<std::size_t>(o);
      double v = o == 0 ? 1.0 : 0.0;
      // sum over D rows touching both columns `row` and `col`
      const std::size_t k_lo = row >= static_cast<std::size_t>(order) ? row - static_cast<std::size_t>(order) : 0;
      const std::size_t k_hi = std::min(col, rows - 1);
      for (std::size_t k = k_lo; k <= k_hi && k < rows; ++k)
        v += rho * coeff[row - k] * coeff[col - k];
      band[static_cast<std::size_t>(o)][col] = v;
    }
  }
  return band;
}

// Band of D D^T restricted to the given ascending subset of rows of D^(r);
// rows further than `order` apart do not overlap.
inline std::vector<std::vector<double>> gram_rows_band(const std::vector<int>& rows, int order) {
  const auto coeff = diff_stencil(order);
  const std::size_t m = rows.size();
  std::vector<std::vector<double>> band(static_cast<std::size_t>(order) + 1);
  for (int o = 0; o <= order; ++o) band[static_cast<std::size_t>(o)].assign(m > static_cast<std::size_t>(o) ? m - static_cast<std::size_t>(o) : 0, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    for (int o = 0; o <= order && p + static_cast<std::size_t>(o) < m; ++o) {
      const int shift = rows[p + static_cast<std::size_t>(o)] - rows[p];
      if (shift > order) continue;
      double v = 0.0;
      for (int l = 0; l + shift <= order; ++l)
        v += coeff[static_cast<std::size_t>(l + shift)] * coeff[static_cast<std::size_t>(l)];
      band[static_cast<std::size_t>(o)][p] = v;
    }
  }
  return band;
}

}  // namespace cvdenoise
