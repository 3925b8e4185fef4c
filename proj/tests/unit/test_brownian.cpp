#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "mvsim/brownian.hpp"

using namespace mvsim;

TEST_SUITE("brownian") {

namespace {

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("time grid validation") {
  CHECK(TimeGrid::make(0.01, 100).horizon() == doctest::Approx(1.0));
  CHECK_THROWS(TimeGrid::make(0.0, 10));
  CHECK_THROWS(TimeGrid::make(1.0, 10));
  CHECK_THROWS(TimeGrid::make(0.1, 0));
  CHECK(TimeGrid::covering(0.01, 8.0).n_steps == 800);
  CHECK(steps_for(0.0025, 1.0) == 400);
  CHECK(steps_for(0.01, 0.0) == 0);
  CHECK_THROWS(steps_for(0.03, 1.0));
  CHECK(refinement_factor(0.04, 0.0025) == 16);
  CHECK(refinement_factor(0.04, 0.04 / 1024) == 1024);
  CHECK_THROWS(refinement_factor(0.04, 0.03));
}

TEST_CASE("identical arguments give bitwise identical streams") {
  const auto grid = TimeGrid::make(0.01, 1000);
  const auto a = sample_increments(99, 3, grid, 2).values();
  const auto b = sample_increments(99, 3, grid, 2).values();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("cursor and materialised stream agree") {
  const auto grid = TimeGrid::make(0.02, 50);
  const auto s = sample_increments(5, 11, grid, 3);
  BrownianCursor cursor(5, 11, 0.02, 3);
  std::vector<double> dw(3);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    cursor.advance(dw);
    CHECK(dw == s.increment(k));
  }
  CHECK(cursor.steps_taken() == 50);
}

TEST_CASE("distinct particles are uncorrelated") {
  const auto grid = TimeGrid::make(0.01, 100000);
  const auto a = sample_increments(2024, 1, grid, 1).values();
  const auto b = sample_increments(2024, 2, grid, 1).values();
  CHECK(std::abs(correlation(a, b)) < 0.02);
}

TEST_CASE("increment mean and variance match N(0, h)") {
  const double h = 0.01;
  const std::size_t n = 100000;
  const auto xs = sample_increments(77, 0, TimeGrid::make(h, n), 1).values();
  CHECK(std::abs(mean_of(xs)) < 3.0 * std::sqrt(h / n));
  CHECK(std::abs(variance_of(xs) - h) < 3.0 * std::sqrt(2.0 * h * h / n));
}

TEST_CASE("multidimensional increments have covariance h I") {
  const double h = 0.04;
  const std::size_t n = 50000;
  const auto v = sample_increments(3, 9, TimeGrid::make(h, n), 2).values();
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = v[2 * k];
    y[k] = v[2 * k + 1];
  }
  CHECK(std::abs(variance_of(x) - h) < 3.0 * std::sqrt(2.0 * h * h / n));
  CHECK(std::abs(variance_of(y) - h) < 3.0 * std::sqrt(2.0 * h * h / n));
  CHECK(std::abs(correlation(x, y)) < 0.02);
}

TEST_CASE("substream seeds separate ids and tags") {
  CHECK(substream_seed(1, 0, "brownian") != substream_seed(1, 1, "brownian"));
  CHECK(substream_seed(1, 0, "brownian") != substream_seed(1, 0, "initial"));
  CHECK(substream_seed(1, 0, "brownian") != substream_seed(2, 0, "brownian"));
  CHECK(substream_seed(1, 0, "brownian") == substream_seed(1, 0, "brownian"));
}

TEST_CASE("coarse increments are sums of fine increments") {
  const auto fine = sample_increments(8, 4, TimeGrid::make(0.0025, 400), 1);
  const auto coarse = coarsen(fine, 16);
  CHECK(coarse.grid().h == 0.04);
  CHECK(coarse.grid().n_steps == 25);
  const auto fv = fine.values();
  for (std::size_t k = 0; k < 25; ++k) {
    double sum = 0.0;
    for (std::size_t i = 16 * k; i < 16 * (k + 1); ++i) sum += fv[i];
    CHECK(std::abs(coarse.increment(k)[0] - sum) <= 1e-12);
  }
  // Terminal value is shared exactly.
  CHECK(coarse.path_at(25)[0] == fine.path_at(400)[0]);
}

TEST_CASE("cumulative sums agree at shared times") {
  const auto fine = sample_increments(1, 2, TimeGrid::make(0.005, 200), 1);
  const auto coarse = coarsen(fine, 4);
  const auto fv = fine.values();
  const auto cv = coarse.values();
  double wf = 0.0, wc = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    for (std::size_t i = 4 * k; i < 4 * (k + 1); ++i) wf += fv[i];
    wc += cv[k];
    CHECK(std::abs(wf - wc) <= 1e-12);
  }
}

TEST_CASE("coarsening chains compose bitwise") {
  const auto fine = sample_increments(42, 0, TimeGrid::make(0.04 / 64, 640), 2);
  const auto once = coarsen(fine, 16).values();
  const auto twice = coarsen(coarsen(fine, 4), 4).values();
  const auto other = coarsen(coarsen(fine, 2), 8).values();
  REQUIRE(once.size() == twice.size());
  CHECK(std::memcmp(once.data(), twice.data(), once.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(once.data(), other.data(), once.size() * sizeof(double)) == 0);
}

TEST_CASE("coarsen rejects non-divisors") {
  const auto s = sample_increments(1, 1, TimeGrid::make(0.01, 10), 1);
  CHECK_THROWS(coarsen(s, 3));
  CHECK_THROWS(coarsen(s, 0));
  CHECK(coarsen(s, 1).values() == s.values());
}

TEST_CASE("binary dump round trip") {
  const auto s = sample_increments(6, 7, TimeGrid::make(0.1, 5), 2);
  std::stringstream buf;
  write_stream_binary(buf, s);
  const std::string bytes = buf.str();
  CHECK(bytes.size() == 16 + 5 * 2 * 8);
  CHECK(bytes.substr(0, 4) == "MVBW");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);  // little-endian dim
  CHECK(static_cast<unsigned char>(bytes[8]) == 5);  // little-endian n_steps
  const auto dump = read_stream_binary(buf);
  CHECK(dump.dim == 2);
  CHECK(dump.n_steps == 5);
  CHECK(dump.increments == s.values());

  std::stringstream bad("XXXX");
  CHECK_THROWS(read_stream_binary(bad));
}

}
