#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mvsim/assignment.hpp"

using mvsim::solve_assignment;

TEST_SUITE("assignment") {

namespace {

double brute_force(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i * n + perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("identity cost picks the diagonal") {
  const std::vector<double> cost{0, 1, 1, 1, 0, 1, 1, 1, 0};
  const auto a = solve_assignment(cost, 3);
  CHECK(a.cost == 0.0);
  CHECK(a.row_to_col == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("anti-diagonal optimum") {
  const std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
  const auto a = solve_assignment(cost, 3);
  CHECK(a.cost == doctest::Approx(5.0));
  CHECK(a.cost == doctest::Approx(brute_force(cost, 3)));
}

TEST_CASE("matches brute force on random matrices") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 7;
    std::vector<double> cost(n * n);
    for (auto& c : cost) c = u(rng);
    const auto a = solve_assignment(cost, n);
    auto cols = a.row_to_col;
    std::sort(cols.begin(), cols.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(cols[i] == i);
    CHECK(std::abs(a.cost - brute_force(cost, n)) <= 1e-12);
  }
}

TEST_CASE("rejects bad input") {
  CHECK_THROWS(solve_assignment(std::vector<double>{1, 2, 3}, 2));
  CHECK_THROWS(solve_assignment(std::vector<double>{1, std::nan(""), 3, 4}, 2));
  CHECK(solve_assignment(std::vector<double>{}, 0).row_to_col.empty());
}

}
