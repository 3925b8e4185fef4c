// Acceptance driver: `mvsim_acceptance <n>` checks criterion n and prints a
// single PASS or FAIL line for it (detail lines above it are indented).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvsim/config.hpp"
#include "mvsim/measure.hpp"
#include "mvsim/report.hpp"
#include "mvsim/runner.hpp"
#include "mvsim_cli/presets.hpp"

using namespace mvsim;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void expect(bool ok, const std::string& what) {
    lines.push_back(std::string(ok ? "ok    " : "FAILED") + "  " + what);
    pass = pass && ok;
  }
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

RunConfig preset_config(const std::string& id, unsigned threads) {
  const auto* preset = cli::find_preset(id);
  if (!preset) throw std::runtime_error("missing preset " + id);
  RunConfig c = parse_run_config(preset->text);
  c.threads = threads;
  std::visit([&](auto& p) { p.threads = threads; }, c.params);
  return c;
}

struct TimedReport {
  StudyReport report;
  double seconds = 0.0;
};

TimedReport run_timed(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  TimedReport t{run_study(config), 0.0};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

bool passed(const StudyReport& r, const std::string& verdict) {
  return r.verdict(verdict).status == VerdictStatus::Pass;
}

Outcome check_strong_convergence() {
  Outcome o;
  const auto t = run_timed(preset_config("figure2", 1));
  const auto& fit = t.report.fit("rmse_vs_h");
  o.expect(fit.slope >= 0.4 && fit.slope <= 0.6, "slope " + num(fit.slope) + " in [0.4, 0.6]");
  o.expect(fit.r_squared >= 0.95, "r^2 " + num(fit.r_squared) + " >= 0.95");
  o.expect(t.seconds < 120.0, "single-threaded runtime " + num(t.seconds) + " s < 120 s");
  return o;
}

Outcome check_chaos() {
  Outcome o;
  const auto t = run_timed(preset_config("figure3_left", 0));
  const double slope = t.report.metric("slope");
  o.expect(slope >= -1.15 && slope <= -0.85, "slope " + num(slope) + " in [-1.15, -0.85]");
  o.expect(t.seconds < 300.0, "runtime " + num(t.seconds) + " s < 300 s");
  return o;
}

Outcome check_error_vs_h() {
  Outcome o;
  const auto t = run_timed(preset_config("figure3_right", 0));
  const double slope = t.report.metric("slope");
  o.expect(slope >= 0.8 && slope <= 1.2, "slope " + num(slope) + " in [0.8, 1.2]");
  o.expect(t.seconds < 120.0, "runtime " + num(t.seconds) + " s < 120 s");
  return o;
}

Outcome check_invariant_rate() {
  Outcome o;
  const auto config = preset_config("theorem24_rate", 0);
  const auto& p = std::get<InvariantMeasureParams>(config.params);
  const auto r = run_study(config);
  o.expect(passed(r, "rate_sqrt_h_quantile"),
           "W2 to N(0, 1/2.4) <= C sqrt(h), fitted C = " + num(r.metric("rate_constant_quantile")) +
               ", worst excess " + num(r.verdict("rate_sqrt_h_quantile").value));
  for (double h : p.h_set) {
    std::ostringstream tag;
    tag << h;
    const std::string key = "discrete_stationary_quantile_h" + tag.str();
    o.expect(passed(r, key), "h = " + tag.str() + ": W2 to discrete stationary law " +
                                 num(r.verdict(key).value) + " <= 0.02");
  }
  // Independent oracle for the analytic gap at h = 0.01.
  const double v_disc = 1.0 / (2.4 - 1.44 * 0.01);
  const double v_cont = 1.0 / 2.4;
  const double oracle = std::abs(std::sqrt(v_disc) - std::sqrt(v_cont));
  const double gap = r.metric("analytic_gap_w2_h0.01");
  o.expect(std::abs(gap - oracle) <= 1e-12,
           "analytic gap " + num(gap) + " matches oracle " + num(oracle));
  o.expect(std::abs(oracle - 0.0019) < 0.0001, "analytic gap is about 0.0019");
  return o;
}

Outcome check_invariant_uniqueness() {
  Outcome o;
  auto config = preset_config("theorem24_rate", 0);
  auto& p = std::get<InvariantMeasureParams>(config.params);
  p.h_set = {0.01};
  p.horizon = 30.0;
  p.paths = 10000;
  p.initials = {-6.0, 6.0, 16.0};
  const auto r = run_study(config);
  std::size_t pairs = 0;
  for (const auto& [key, value] : r.metrics) {
    if (key.rfind("uniqueness_", 0) != 0) continue;
    ++pairs;
    o.expect(value < 0.05, key + " = " + num(value) + " < 0.05");
  }
  o.expect(pairs == 3, "three pairwise distances checked");
  return o;
}

Outcome check_contraction() {
  Outcome o;
  const auto r = run_study(preset_config("lemma32", 0));
  // xi1 from the declared constants, computed here independently.
  const double alpha = 1.6, beta = 0.4, a = 2.88, b = 0.32, safety = 0.9;
  const double h2 = safety * std::min(1.0, (alpha - beta) / (a + b));
  const double xi1 = alpha - beta - (a + b) * h2;
  o.expect(std::abs(xi1 - 0.12) < 1e-12, "oracle xi1 = " + num(xi1));
  o.expect(std::abs(r.metric("xi1") - xi1) < 1e-12, "reported xi1 " + num(r.metric("xi1")));
  const double rel = r.metric("closed_form_max_rel_error");
  o.expect(rel <= 1e-10, "max relative error to 12 (0.992)^k: " + num(rel) + " <= 1e-10");
  const double rate = r.metric("measured_rate");
  o.expect(rate >= xi1, "measured decay rate " + num(rate) + " >= xi1");
  return o;
}

Outcome check_moment_bound() {
  Outcome o;
  const auto config = preset_config("lemma31", 0);
  const auto& p = std::get<MomentBoundParams>(config.params);
  o.expect(p.h == 0.005 && p.horizon == 50.0 && p.paths == 10000, "h = 0.005, T = 50, M = 10^4");
  const auto r = run_study(config);
  const double h = 0.005, gamma = 1.6, kappa = 0.4, rho = 1.0, c0 = 4.0;
  const double a1 = 1.0 - (gamma - kappa) * h + 2.0 * c0 * h * h;
  const double a2 = c0 * h * h + h * kappa * (1.0 + rho);
  const double c1 = 36.0 + a2 / (1.0 - a1);
  o.expect(std::abs(c1 - (36.0 + 0.0041 / 0.0058)) < 1e-9, "oracle C1 = " + num(c1));
  o.expect(std::abs(r.metric("C1") - c1) < 1e-9, "reported C1 " + num(r.metric("C1")));
  const double worst = r.metric("sup_second_moment_plus_stderr");
  o.expect(worst <= c1, "max over k of second moment + 3 SE = " + num(worst) + " <= C1");
  o.expect(passed(r, "second_moment_below_C1"), "study verdict passes");
  return o;
}

double brute_force_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const std::size_t n = a.size(), d = a.dim();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = a.point(i)[k] - b.point(perm[i])[k];
        cost += diff * diff;
      }
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(n));
}

EmpiricalMeasure random_measure(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<double> pts(n * d);
  for (auto& x : pts) x = g(rng);
  return EmpiricalMeasure(std::move(pts), d);
}

Outcome check_wasserstein_oracles() {
  Outcome o;
  std::mt19937_64 rng(20240917);
  std::uniform_int_distribution<std::size_t> small_n(1, 8), dims(1, 3), line_n(1, 64);

  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = small_n(rng), d = dims(rng);
    const auto a = random_measure(rng, n, d), b = random_measure(rng, n, d);
    worst = std::max(worst, std::abs(w2_assignment(a, b) - brute_force_w2(a, b)));
  }
  o.expect(worst <= 1e-12, "assignment vs brute force, 200 pairs: max gap " + num(worst));

  worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = line_n(rng);
    const auto a = random_measure(rng, n, 1), b = random_measure(rng, n, 1);
    worst = std::max(worst, std::abs(w2_1d(a, b) - w2_assignment(a, b)));
  }
  o.expect(worst <= 1e-9, "sorted vs assignment on the line, 200 pairs: max gap " + num(worst));

  double asym = 0.0, triangle = 0.0, self = 0.0, negative = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = small_n(rng), d = dims(rng);
    const auto x = random_measure(rng, n, d), y = random_measure(rng, n, d),
               z = random_measure(rng, n, d);
    const double xy = w2_assignment(x, y), yx = w2_assignment(y, x);
    const double xz = w2_assignment(x, z), zy = w2_assignment(z, y);
    asym = std::max(asym, std::abs(xy - yx));
    triangle = std::max(triangle, xy - (xz + zy));
    self = std::max(self, w2_assignment(x, x));
    negative = std::max(negative, -std::min({xy, xz, zy}));
  }
  o.expect(asym <= 1e-9, "symmetry on 200 triples: max gap " + num(asym));
  o.expect(triangle <= 1e-9, "triangle inequality on 200 triples: max excess " + num(triangle));
  o.expect(self <= 1e-9, "W2(mu, mu) = 0: max " + num(self));
  o.expect(negative <= 0.0, "non-negativity");
  return o;
}

Outcome check_determinism() {
  Outcome o;
  for (const auto& preset : cli::presets()) {
    const std::string id(preset.id);
    const auto one = run_study(preset_config(id, 1));
    const auto four = run_study(preset_config(id, 4));
    const auto text = report_json_without_runtime(one);
    o.expect(text == report_json_without_runtime(four),
             id + ": report identical with 1 and 4 threads (" +
                 std::to_string(text.size()) + " bytes)");
  }
  return o;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "strong convergence slope", check_strong_convergence},
      {2, "chaos error vs particle count", check_chaos},
      {3, "discretisation error vs step size", check_error_vs_h},
      {4, "invariant measure rate", check_invariant_rate},
      {5, "invariant measure uniqueness", check_invariant_uniqueness},
      {6, "contraction", check_contraction},
      {7, "moment bound", check_moment_bound},
      {8, "wasserstein oracles", check_wasserstein_oracles},
      {9, "determinism", check_determinism},
  };
  if (argc != 2) {
    std::cerr << "usage: mvsim_acceptance <criterion 1-9>\n";
    return 2;
  }
  const int wanted = std::atoi(argv[1]);
  const auto it = std::find_if(criteria.begin(), criteria.end(),
                               [&](const Criterion& c) { return c.number == wanted; });
  if (it == criteria.end()) {
    std::cerr << "unknown criterion " << argv[1] << "\n";
    return 2;
  }
  Outcome outcome;
  try {
    outcome = it->check();
  } catch (const std::exception& e) {
    outcome.expect(false, std::string("error: ") + e.what());
  }
  for (const auto& line : outcome.lines) std::cout << "  " << line << "\n";
  std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << it->number << ": " << it->name
            << "\n";
  return outcome.pass ? 0 : 1;
}
