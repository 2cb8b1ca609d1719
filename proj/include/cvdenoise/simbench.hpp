#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cvdenoise/cvcore.hpp"
#include "cvdenoise/dcart.hpp"
#include "cvdenoise/numeric.hpp"
#include "cvdenoise/rng.hpp"
#include "cvdenoise/tfilter.hpp"

namespace cvdenoise {

enum class Suite { dc, tf };

struct Scenario {
  Suite suite = Suite::dc;
  int id = 1;
  int n = 128;
  int order = 1;  // trend filtering order, tf suite only
};

inline void validate_scenario(const Scenario& s) {
  if (s.suite == Suite::dc) {
    if (s.id < 1 || s.id > 3) throw std::invalid_argument("scenario id must be 1..3 for the dc suite");
    if (s.n < 8) throw std::invalid_argument("dc suite needs n >= 8");
  } else {
    if (s.id < 1 || s.id > 4) throw std::invalid_argument("scenario id must be 1..4 for the tf suite");
    if (s.order < 1 || s.order > 4) throw std::invalid_argument("tf order must be in [1, 4]");
    if (s.n < 12 || s.n < 3 * (s.order + 1)) throw std::invalid_argument("tf suite needs n >= max(12, 3(r+1))");
  }
}

// 2-D test signals on the n x n lattice: a centered square, a centered
// disc, and a smooth exponential bump, all evaluated at 1-based indices.
inline LatticeSignal gen_dc_signal(int scenario, int n) {
  validate_scenario(Scenario{Suite::dc, scenario, n, 1});
  LatticeShape shape(2, n);
  std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
  const int lo = n / 3;
  const int hi = (2 * n) / 3;
  for (int i2 = 1; i2 <= n; ++i2) {
    for (int i1 = 1; i1 <= n; ++i1) {
      const std::size_t idx = static_cast<std::size_t>(i2 - 1) * n + (i1 - 1);
      switch (scenario) {
        case 1:
          values[idx] = (lo <= i1 && i1 <= hi && lo <= i2 && i2 <= hi) ? 1.0 : 0.0;
          break;
        case 2: {
          const double d1 = i1 - n / 2.0;
          const double d2 = i2 - n / 2.0;
          values[idx] = std::sqrt(d1 * d1 + d2 * d2) <= n / 4.0 ? 1.0 : 0.0;
          break;
        }
        case 3: {
          const double x = static_cast<double>(i1) / n - 0.5;
          const double y = static_cast<double>(i2) / n - 0.5;
          values[idx] = 20.0 * std::exp(-5.0 * (x * x + y * y - 0.9 * x * y));
          break;
        }
      }
    }
  }
  return LatticeSignal(shape, std::move(values));
}

// 1-D test signals theta_i = f(i/n): piecewise constant, piecewise linear,
// piecewise quadratic, and a smooth sinusoid. Knot membership is decided by
// exact integer comparisons.
inline std::vector<double> gen_tf_signal(int scenario, int n) {
  validate_scenario(Scenario{Suite::tf, scenario, n, 1});
  std::vector<double> values(static_cast<std::size_t>(n), 0.0);
  for (int i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    double v = 0.0;
    switch (scenario) {
      case 1:
        if (5 * i < n) v = 0.0;
        else if (5 * i < 2 * n) v = 2.0;
        else if (5 * i < 3 * n) v = 1.0;
        else if (5 * i < 4 * n) v = -1.0;
        else v = 2.0;
        break;
      case 2:
        if (3 * i <= n) v = 6.0 * x;
        else if (3 * i <= 2 * n) v = -12.0 * x + 6.0;
        else v = x - 8.0 / 3.0;
        break;
      case 3:
        if (3 * i <= n) v = 18.0 * x * x;
        else if (3 * i <= 2 * n) v = 3.0 - 36.0 * (x - 0.5) * (x - 0.5);
        else v = 18.0 * (x - 1.0) * (x - 1.0);
        break;
      case 4:
        v = std::sin(2.0 * std::numbers::pi * x) + std::cos(5.0 * std::numbers::pi * x);
        break;
    }
    values[static_cast<std::size_t>(i - 1)] = v;
  }
  return values;
}

inline std::vector<double> add_noise(const std::vector<double>& theta, double sigma,
                                     std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be nonnegative");
  std::vector<double> y(theta);
  if (sigma == 0.0) return y;
  CounterRng rng(seed);
  for (double& v : y) v += sigma * rng.next_normal();
  return y;
}

struct MethodSpec {
  int grid_exponent = -1;  // -1: ceil(log2 N)
  TfConfig tf_config;
  int jobs = 1;
};

struct SimResult {
  Scenario scenario;
  double sigma = 0.0;
  int reps = 0;
  std::vector<double> rep_mse;         // NaN where a replication failed
  std::vector<std::string> failures;   // "rep <k>: <message>"
  double mean_mse = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo MSE of the cross-validated estimator for one scenario.
// Replication k draws noise from stream 2k and folds from stream 2k+1 of
// the master seed; replications may run on several threads and aggregate
// identically to a serial run.
inline SimResult monte_carlo_mse(const MethodSpec& method, const Scenario& scenario, double sigma,
                                 int reps, std::uint64_t seed) {
  validate_scenario(scenario);
  if (reps < 1) throw std::invalid_argument("monte_carlo_mse: need at least one replication");

  std::vector<double> truth;
  LatticeShape shape(1, 1);
  if (scenario.suite == Suite::dc) {
    LatticeSignal signal = gen_dc_signal(scenario.id, scenario.n);
    shape = signal.shape;
    truth = std::move(signal.values);
  } else {
    truth = gen_tf_signal(scenario.id, scenario.n);
  }
  const std::size_t total = truth.size();
  const LambdaGrid grid = method.grid_exponent >= 0 ? grid_from_exponent(method.grid_exponent)
                                                    : default_grid(static_cast<std::int64_t>(total));

  SimResult result;
  result.scenario = scenario;
  result.sigma = sigma;
  result.reps = reps;
  result.rep_mse.assign(static_cast<std::size_t>(reps), std::nan(""));
  std::vector<std::string> errors(static_cast<std::size_t>(reps));

  auto run_replication = [&](int k) {
    const std::uint64_t noise_seed = CounterRng::derive(seed, 2 * static_cast<std::uint64_t>(k));
    const std::uint64_t fold_seed = CounterRng::derive(seed, 2 * static_cast<std::uint64_t>(k) + 1);
    try {
      const std::vector<double> y = add_noise(truth, sigma, noise_seed);
      std::vector<double> fit;
      if (scenario.suite == Suite::dc) {
        fit = cvdcart(LatticeSignal(shape, y), grid, fold_seed).final_fit;
      } else {
        fit = cvtf(y, scenario.order, grid, method.tf_config).final_fit;
      }
      result.rep_mse[static_cast<std::size_t>(k)] =
          squared_distance(fit, truth) / static_cast<double>(total);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  };

  const int jobs = std::max(1, method.jobs);
  if (jobs == 1) {
    for (int k = 0; k < reps; ++k) run_replication(k);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&, w]() {
        for (int k = w; k < reps; k += jobs) run_replication(k);
      });
    for (auto& t : workers) t.join();
  }

  for (int k = 0; k < reps; ++k)
    if (!errors[static_cast<std::size_t>(k)].empty())
      result.failures.push_back("rep " + std::to_string(k) + ": " + errors[static_cast<std::size_t>(k)]);
  if (static_cast<int>(result.failures.size()) * 10 > reps)
    throw std::runtime_error("monte_carlo_mse: more than 10% of replications failed; first: " +
                             result.failures.front());

  KahanSum mean_acc;
  int ok = 0;
  for (double m : result.rep_mse)
    if (!std::isnan(m)) {
      mean_acc.add(m);
      ++ok;
    }
  result.mean_mse = mean_acc.value() / ok;
  if (ok > 1) {
    KahanSum var_acc;
    for (double m : result.rep_mse)
      if (!std::isnan(m)) {
        const double d = m - result.mean_mse;
        var_acc.add(d * d);
      }
    result.std_error = std::sqrt(var_acc.value() / (ok - 1)) / std::sqrt(static_cast<double>(ok));
  }
  return result;
}

// Pivot layout matching the reported tables: one row per n, one column per
// scenario, cells hold the mean MSE.
inline std::string sim_table_csv(const std::vector<SimResult>& results) {
  std::vector<int> ns, ids;
  for (const auto& r : results) {
    if (std::find(ns.begin(), ns.end(), r.scenario.n) == ns.end()) ns.push_back(r.scenario.n);
    if (std::find(ids.begin(), ids.end(), r.scenario.id) == ids.end()) ids.push_back(r.scenario.id);
  }
  std::sort(ns.begin(), ns.end());
  std::sort(ids.begin(), ids.end());

  std::ostringstream out;
  out << "n";
  for (int id : ids) out << ",scenario_" << id;
  out << "\n";
  out.precision(17);
  for (int n : ns) {
    out << n;
    for (int id : ids) {
      out << ",";
      for (const auto& r : results)
        if (r.scenario.n == n && r.scenario.id == id) {
          out << r.mean_mse;
          break;
        }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace cvdenoise
