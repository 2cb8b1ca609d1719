#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cvdenoise {

// Kahan (compensated) summation. Aggregations that feed reported numbers
// use this so results do not depend on accumulation order quirks.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double soft_threshold(double x, double level) {
  if (x > level) return x - level;
  if (x < -level) return x + level;
  return 0.0;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  KahanSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc.add(d * d);
  }
  return acc.value();
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace cvdenoise
