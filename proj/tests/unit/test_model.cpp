#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mvsim/config.hpp"
#include "mvsim/model.hpp"

using namespace mvsim;

TEST_SUITE("model") {

namespace {

ModelSpec linear_model() { return make_linear_mean_field({}, default_linear_constants()); }

}  // namespace

TEST_CASE("linear drift and diffusion") {
  const auto model = linear_model();
  const auto mu = EmpiricalMeasure::from_scalars({6.0});
  const double x = 6.0;
  const auto b = eval_drift(model, std::span<const double>(&x, 1), MeasureView::empirical(mu));
  CHECK(b[0] == doctest::Approx(-4.8));
  const auto s =
      eval_diffusion(model, std::span<const double>(&x, 1), MeasureView::empirical(mu));
  CHECK(s[0] == 1.0);

  const LawState law{{2.0}, 5.0};
  const double y = -1.0;
  CHECK(eval_drift(model, std::span<const double>(&y, 1), MeasureView::closed_form(law))[0] ==
        doctest::Approx(1.2 + 0.8));
  CHECK(model.law_mode == LawMode::ExactLinear);
  CHECK(model.linear.has_value());
}

TEST_CASE("drift is affine in the state and the mean") {
  const auto model = linear_model();
  const auto mu = EmpiricalMeasure::from_scalars({-1.0, 3.0, 4.0});
  const auto view = MeasureView::empirical(mu);
  auto b = [&](double x) { return eval_drift(model, std::span<const double>(&x, 1), view)[0]; };
  CHECK(b(1.0) - b(0.0) == doctest::Approx(-1.2));
  CHECK(b(0.0) == doctest::Approx(0.4 * 2.0));
  CHECK(b(0.25) == doctest::Approx(0.75 * b(0.0) + 0.25 * b(1.0)));
}

TEST_CASE("bad inputs") {
  const auto model = linear_model();
  const auto mu = EmpiricalMeasure::from_scalars({0.0});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(eval_drift(model, std::span<const double>(&nan, 1), MeasureView::empirical(mu)));
  const std::vector<double> two{1.0, 2.0};
  CHECK_THROWS(eval_drift(model, two, MeasureView::empirical(mu)));
  CHECK_THROWS(make_linear_mean_field({0.4, 0.4, 1.0}));
  CHECK_THROWS(make_linear_mean_field({1.2, -0.1, 1.0}));
  CHECK_THROWS(make_linear_mean_field({1.2, 0.4, -1.0}));
  CHECK_THROWS(MeasureView::closed_form(LawState{{3.0}, 1.0}));
  AssumptionConstants k = default_linear_constants();
  k.beta = k.alpha;
  CHECK_THROWS(k.validate());
}

TEST_CASE("hilbert-schmidt norm") {
  const std::vector<double> m{1.0, 2.0, -2.0, 0.0};
  CHECK(hs_norm_squared(m) == 9.0);
}

TEST_CASE("declared constants survive random falsification") {
  const auto model = linear_model();
  const auto samples = draw_assumption_samples(1, 1000, -10.0, 10.0, 16, 42);
  CHECK(samples.size() == 1000);
  const auto a2 = check_assumption2(model, samples);
  const auto a3 = check_assumption3(model, samples);
  CHECK(a2.samples_checked == 1000);
  CHECK(a2.clean());
  CHECK(a3.clean());
}

TEST_CASE("inflated constants are caught") {
  const auto model = linear_model();
  const auto samples = draw_assumption_samples(1, 1000, -10.0, 10.0, 16, 42);
  AssumptionConstants strong = default_linear_constants();
  strong.alpha = 10.0;
  const auto a2 = check_assumption2(model, strong, samples);
  CHECK_FALSE(a2.clean());
  CHECK(a2.count(1) > 0);
  for (const auto& v : a2.violations) CHECK(v.slack < 0.0);

  AssumptionConstants weak_growth = default_linear_constants();
  weak_growth.c0 = 0.1;
  const auto a3 = check_assumption3(model, weak_growth, samples);
  CHECK_FALSE(a3.clean());
  CHECK(a3.count(1) > 0);
}

TEST_CASE("sampling is deterministic") {
  const auto a = draw_assumption_samples(2, 10, -1.0, 1.0, 4, 7);
  const auto b = draw_assumption_samples(2, 10, -1.0, 1.0, 4, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].mu.size() == 4);
    CHECK(a[i].mu.dim() == 2);
    for (double v : a[i].y) CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("contraction-rate condition") {
  AssumptionConstants k = default_linear_constants();
  CHECK_FALSE(check_assumption4(k));  // 2.88 + 0.32 >= 1.2
  k.a = 0.5;
  k.b = 0.2;
  CHECK(check_assumption4(k));
  k.b = 0.8;
  CHECK_FALSE(check_assumption4(k));
}

}
