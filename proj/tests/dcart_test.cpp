#include <doctest.h>

#include <cmath>

#include "cvdenoise/dcart.hpp"
#include "cvdenoise/rng.hpp"
#include "oracles.hpp"

using namespace cvdenoise;

namespace {

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

std::vector<char> mask_from(const std::vector<int>& observed, std::size_t n) {
  std::vector<char> mask(n, 0);
  for (int i : observed) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

}  // namespace

TEST_CASE("solve_completion on a two-level step signal") {
  const LatticeSignal y(LatticeShape(1, 4), {0, 0, 10, 10});
  const auto idx = all_indices(4);

  SUBCASE("small lambda splits at the step") {
    const auto fit = solve_completion(y, idx, 1.0);
    CHECK(fit.objective == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.fitted == std::vector<double>{0, 0, 10, 10});
    const auto ls = leaves(fit.partition);
    REQUIRE(ls.size() == 2);
    CHECK(ls[0] == Rectangle({1}, {2}));
    CHECK(ls[1] == Rectangle({3}, {4}));
  }

  SUBCASE("large lambda keeps one leaf") {
    const auto fit = solve_completion(y, idx, 200.0);
    CHECK(fit.leaf_count == 1);
    CHECK(fit.objective == doctest::Approx(300.0).epsilon(1e-12));
    for (double v : fit.fitted) CHECK(v == doctest::Approx(5.0));
  }
}

TEST_CASE("solve_completion fits a constant exactly with one leaf") {
  const LatticeSignal y(LatticeShape(2, 3), std::vector<double>(9, 4.5));
  const std::vector<int> observed{0, 2, 4, 6, 8};
  for (double lambda : {0.25, 1.0, 64.0}) {
    const auto fit = solve_completion(y, observed, lambda);
    CHECK(fit.leaf_count == 1);
    for (double v : fit.fitted) CHECK(v == doctest::Approx(4.5).epsilon(1e-14));
  }
}

TEST_CASE("solve_completion validates its inputs") {
  const LatticeSignal y(LatticeShape(1, 4), {1, 2, 3, 4});
  CHECK_THROWS_AS(solve_completion(y, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_completion(y, all_indices(4), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_completion(y, {7}, 1.0), std::invalid_argument);
}

TEST_CASE("solve_full equals completion with every index observed") {
  const LatticeSignal y(LatticeShape(1, 4), {0, 0, 10, 10});
  const auto fit = solve_full(y, 1.0);
  CHECK(fit.objective == doctest::Approx(2.0).epsilon(1e-12));

  const LatticeSignal grid2(LatticeShape(2, 2), {1, 1, 9, 9});
  const auto fit2 = solve_full(grid2, 0.5);
  CHECK(fit2.objective == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit2.fitted == std::vector<double>{1, 1, 9, 9});
  const auto ls = leaves(fit2.partition);
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == Rectangle({1, 1}, {2, 1}));
  CHECK(ls[1] == Rectangle({1, 2}, {2, 2}));

  const LatticeSignal point(LatticeShape(1, 1), {3.5});
  const auto fit1 = solve_full(point, 2.0);
  CHECK(fit1.fitted == std::vector<double>{3.5});
  CHECK(fit1.objective == doctest::Approx(2.0));
}

TEST_CASE("objective recomputes the stored value independently") {
  CounterRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_u64() % 4);
    const int d = 1 + static_cast<int>(rng.next_u64() % 2);
    const LatticeShape shape(d, n);
    std::vector<double> values(static_cast<std::size_t>(shape.total()));
    for (double& v : values) v = 2.0 * rng.next_normal();
    std::vector<int> observed;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (rng.next_bernoulli()) observed.push_back(static_cast<int>(i));
    if (observed.empty()) observed.push_back(0);
    const double lambda = std::exp(rng.next_unit() * 4.0 - 1.0);

    const LatticeSignal y(shape, values);
    const auto fit = solve_completion(y, observed, lambda);
    CHECK(objective(y, observed, fit, lambda) ==
          doctest::Approx(fit.objective).epsilon(1e-9 * static_cast<double>(shape.total())));
  }
}

TEST_CASE("objective of a hand-built single-leaf fit") {
  const LatticeSignal y(LatticeShape(1, 2), {1, 3});
  DcartFit fit;
  fit.shape = y.shape;
  fit.partition.root = std::make_unique<RdpNode>();
  fit.partition.root->rect = Rectangle::full(y.shape);
  fit.fitted = {2, 2};
  CHECK(objective(y, all_indices(2), fit, 1.0) == doctest::Approx(3.0));
}

TEST_CASE("objective of the trivial partition is the SSE about the mean plus lambda") {
  const LatticeSignal y(LatticeShape(1, 3), {1, 2, 6});
  const auto fit = solve_completion(y, all_indices(3), 1000.0);
  REQUIRE(fit.leaf_count == 1);
  const double mean = 3.0;
  const double sse = 4.0 + 1.0 + 9.0;
  CHECK(objective(y, all_indices(3), fit, 1000.0) == doctest::Approx(sse + 1000.0));
  (void)mean;
}

TEST_CASE("DP objective equals exhaustive enumeration on small lattices") {
  CounterRng rng(909);
  for (int trial = 0; trial < 30; ++trial) {
    const bool two_d = trial % 2 == 1;
    const int n = two_d ? 2 + static_cast<int>(rng.next_u64() % 3)
                        : 2 + static_cast<int>(rng.next_u64() % 7);
    const LatticeShape shape(two_d ? 2 : 1, n);
    std::vector<double> values(static_cast<std::size_t>(shape.total()));
    for (double& v : values) v = 3.0 * rng.next_normal();
    std::vector<int> observed;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (rng.next_bernoulli()) observed.push_back(static_cast<int>(i));
    if (observed.empty()) observed.push_back(static_cast<int>(rng.next_u64() % values.size()));
    const double lambda = std::exp(rng.next_unit() * 6.0 - 3.0);

    const LatticeSignal y(shape, values);
    const auto fit = solve_completion(y, observed, lambda);
    const double brute = oracles::brute_force_min_cost(shape, values,
                                                       mask_from(observed, values.size()), lambda);
    CHECK(fit.objective == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("leaf count is nonincreasing along the lambda grid") {
  CounterRng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const LatticeShape shape(2, 4);
    std::vector<double> values(16);
    for (double& v : values) v = rng.next_normal() + (rng.next_bernoulli() ? 2.0 : 0.0);
    const LatticeSignal y(shape, values);
    int previous = 1 << 30;
    for (double lambda : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto fit = solve_full(y, lambda);
      CHECK(fit.leaf_count <= previous);
      previous = fit.leaf_count;
    }
  }
}

TEST_CASE("completion fit ignores values outside the observed set") {
  CounterRng rng(404);
  const LatticeShape shape(2, 4);
  std::vector<double> values(16);
  for (double& v : values) v = rng.next_normal();
  std::vector<int> observed{0, 1, 3, 5, 8, 9, 13, 15};
  const auto base = solve_completion(LatticeSignal(shape, values), observed, 2.0);

  std::vector<double> perturbed(values);
  const std::vector<char> mask = mask_from(observed, 16);
  for (std::size_t i = 0; i < perturbed.size(); ++i)
    if (!mask[i]) perturbed[i] += 100.0 * rng.next_normal();
  const auto shifted = solve_completion(LatticeSignal(shape, perturbed), observed, 2.0);
  CHECK(oracles::bit_identical(base.fitted, shifted.fitted));
  CHECK(base.objective == shifted.objective);
}

TEST_CASE("DP work stays within the rectangle budget") {
  for (int d = 1; d <= 2; ++d) {
    const int n = d == 1 ? 16 : 8;
    const LatticeShape shape(d, n);
    std::vector<double> values(static_cast<std::size_t>(shape.total()), 1.0);
    values[0] = 2.0;
    const auto fit = solve_full(LatticeSignal(shape, values), 1.0);
    std::int64_t budget = 1;
    for (int k = 0; k < d; ++k) budget *= 2 * n;
    CHECK(fit.stats.rectangles <= budget);
    CHECK(fit.stats.dp_operations <= budget * (d + 1));
  }
}

TEST_CASE("cvdcart recovers a noiseless constant and is seed-deterministic") {
  const LatticeShape shape(2, 4);
  const LatticeSignal y(shape, std::vector<double>(16, 2.5));
  const LambdaGrid grid = default_grid(16);

  const auto a = cvdcart(y, grid, 5);
  for (double v : a.final_fit) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));

  const auto b = cvdcart(y, grid, 5);
  CHECK(a.final_lambda == b.final_lambda);
  CHECK(a.fold_lambdas == b.fold_lambdas);
  CHECK(oracles::bit_identical(a.final_fit, b.final_fit));

  CHECK_THROWS_AS(cvdcart(LatticeSignal(LatticeShape(1, 3), {1, 2, 3}), grid, 1),
                  std::invalid_argument);
}
