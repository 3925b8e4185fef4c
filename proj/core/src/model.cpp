#include "mvsim/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace mvsim {

MeasureView MeasureView::empirical(const EmpiricalMeasure& mu) noexcept {
  return MeasureView(mu.mean(), mu.second_moment(), &mu);
}

MeasureView MeasureView::closed_form(const LawState& law) {
  double sq = 0.0;
  for (double m : law.mean) sq += m * m;
  if (law.second_moment < sq - 1e-12 * std::max(1.0, sq)) {
    throw std::invalid_argument("MeasureView: second moment is below |mean|^2");
  }
  return MeasureView(law.mean, law.second_moment, nullptr);
}

void AssumptionConstants::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("AssumptionConstants: " + what);
  };
  if (!(beta >= 0.0) || !(alpha > beta)) fail("need alpha > beta >= 0");
  if (!(kappa >= 0.0) || !(gamma > kappa)) fail("need gamma > kappa >= 0");
  if (!(rho > 0.0)) fail("need rho > 0");
  if (!(c0 > 0.0) || !(a > 0.0) || !(b > 0.0)) fail("need c0, a, b > 0");
}

ModelSpec make_linear_mean_field(const LinearMeanFieldParams& p,
                                 std::optional<AssumptionConstants> constants) {
  if (!(p.theta >= 0.0) || !(p.lambda > p.theta)) {
    throw std::invalid_argument("linear mean-field model needs lambda > theta >= 0");
  }
  if (!(p.sigma0 >= 0.0) || !std::isfinite(p.sigma0)) {
    throw std::invalid_argument("linear mean-field model needs sigma0 >= 0");
  }
  if (constants) constants->validate();

  ModelSpec model;
  model.name = "linear_mean_field";
  model.dim = 1;
  model.drift = [lambda = p.lambda, theta = p.theta](std::span<const double> x,
                                                     const MeasureView& mu,
                                                     std::span<double> out) {
    out[0] = -lambda * x[0] + theta * mu.mean()[0];
  };
  model.diffusion = [sigma = p.sigma0](std::span<const double>, const MeasureView&,
                                       std::span<double> out) { out[0] = sigma; };
  model.constants = constants;
  model.law_mode = LawMode::ExactLinear;
  model.law_step = [p](const LawState& law, double h) {
    const double m = law.mean[0];
    const double keep = 1.0 - p.lambda * h;
    const double pull = p.theta * h;
    LawState next;
    next.mean = {(1.0 + h * (p.theta - p.lambda)) * m};
    next.second_moment = keep * keep * law.second_moment + 2.0 * keep * pull * m * m +
                         pull * pull * m * m + p.sigma0 * p.sigma0 * h;
    return next;
  };
  model.linear = p;
  return model;
}

namespace {

void require_finite_input(std::span<const double> x, const char* who) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw ModelEvaluationError(std::string(who) + ": input x[" + std::to_string(i) +
                                 "] is not finite");
    }
  }
}

void require_finite_output(std::span<const double> out, std::span<const double> x,
                           const char* who) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      std::string at;
      for (std::size_t c = 0; c < x.size(); ++c) at += (c ? ", " : "") + std::to_string(x[c]);
      throw ModelEvaluationError(std::string(who) + ": output component " + std::to_string(i) +
                                 " is not finite at x = (" + at + ")");
    }
  }
}

}  // namespace

std::vector<double> eval_drift(const ModelSpec& model, std::span<const double> x,
                               const MeasureView& mu) {
  if (x.size() != model.dim) throw std::invalid_argument("eval_drift: dimension mismatch");
  require_finite_input(x, "eval_drift");
  std::vector<double> out(model.dim, 0.0);
  model.drift(x, mu, out);
  require_finite_output(out, x, "eval_drift");
  return out;
}

std::vector<double> eval_diffusion(const ModelSpec& model, std::span<const double> x,
                                   const MeasureView& mu) {
  if (x.size() != model.dim) throw std::invalid_argument("eval_diffusion: dimension mismatch");
  require_finite_input(x, "eval_diffusion");
  std::vector<double> out(model.dim * model.dim, 0.0);
  model.diffusion(x, mu, out);
  require_finite_output(out, x, "eval_diffusion");
  return out;
}

double hs_norm_squared(std::span<const double> matrix) noexcept {
  double s = 0.0;
  for (double v : matrix) s += v * v;
  return s;
}

std::vector<AssumptionSample> draw_assumption_samples(std::size_t dim, std::size_t count,
                                                      double lo, double hi,
                                                      std::size_t measure_size,
                                                      std::uint64_t seed) {
  if (dim == 0 || measure_size == 0) {
    throw std::invalid_argument("draw_assumption_samples: dim and measure size must be >= 1");
  }
  if (!(hi > lo)) throw std::invalid_argument("draw_assumption_samples: need lo < hi");
  std::mt19937_64 engine(seed);
  auto uniform = [&] { return lo + (hi - lo) * static_cast<double>(engine() >> 11) * 0x1.0p-53; };
  auto vec = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& e : v) e = uniform();
    return v;
  };
  std::vector<AssumptionSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    auto x = vec(dim);
    auto y = vec(dim);
    EmpiricalMeasure mu(vec(measure_size * dim), dim);
    EmpiricalMeasure nu(vec(measure_size * dim), dim);
    out.push_back(AssumptionSample{std::move(x), std::move(y), std::move(mu), std::move(nu)});
  }
  return out;
}

std::size_t CheckReport::count(int inequality) const noexcept {
  std::size_t n = 0;
  for (const auto& v : violations) n += v.inequality == inequality ? 1 : 0;
  return n;
}

namespace {

const AssumptionConstants& declared(const ModelSpec& model) {
  if (!model.constants) {
    throw std::invalid_argument("model '" + model.name + "' declares no assumption constants");
  }
  return *model.constants;
}

double w2_squared(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const double w = mu.dim() == 1 ? w2_1d(mu, nu) : w2_assignment(mu, nu);
  return w * w;
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

std::vector<double> minus(std::span<const double> u, std::span<const double> v) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - v[i];
  return out;
}

void record(CheckReport& report, std::size_t index, int inequality, double lhs, double rhs) {
  if (lhs > rhs) report.violations.push_back(Violation{index, inequality, lhs, rhs, rhs - lhs});
}

}  // namespace

CheckReport check_assumption2(const ModelSpec& model, std::span<const AssumptionSample> samples) {
  return check_assumption2(model, declared(model), samples);
}

CheckReport check_assumption2(const ModelSpec& model, const AssumptionConstants& k,
                              std::span<const AssumptionSample> samples) {
  if (samples.empty()) throw std::invalid_argument("check_assumption2: no samples");
  CheckReport report{"assumption2", samples.size(), {}};
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& smp = samples[s];
    const auto mu = MeasureView::empirical(smp.mu);
    const auto nu = MeasureView::empirical(smp.nu);
    const auto bx = eval_drift(model, smp.x, mu);
    const auto by = eval_drift(model, smp.y, nu);
    const auto sx = eval_diffusion(model, smp.x, mu);
    const auto sy = eval_diffusion(model, smp.y, nu);
    const auto dxy = minus(smp.x, smp.y);
    const double w2sq = w2_squared(smp.mu, smp.nu);

    const double lhs1 = 2.0 * dot(minus(bx, by), dxy) + hs_norm_squared(minus(sx, sy));
    const double rhs1 = -k.alpha * dot(dxy, dxy) + k.beta * w2sq;
    record(report, s, 1, lhs1, rhs1);

    const double lhs2 = 2.0 * dot(bx, smp.x) + (1.0 + k.rho) * hs_norm_squared(sx);
    const double rhs2 =
        -k.gamma * dot(smp.x, smp.x) + k.kappa * (1.0 + k.rho + smp.mu.second_moment());
    record(report, s, 2, lhs2, rhs2);
  }
  return report;
}

CheckReport check_assumption3(const ModelSpec& model, std::span<const AssumptionSample> samples) {
  return check_assumption3(model, declared(model), samples);
}

CheckReport check_assumption3(const ModelSpec& model, const AssumptionConstants& k,
                              std::span<const AssumptionSample> samples) {
  if (samples.empty()) throw std::invalid_argument("check_assumption3: no samples");
  CheckReport report{"assumption3", samples.size(), {}};
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& smp = samples[s];
    const auto mu = MeasureView::empirical(smp.mu);
    const auto nu = MeasureView::empirical(smp.nu);
    const auto bx = eval_drift(model, smp.x, mu);
    const auto by = eval_drift(model, smp.y, nu);
    const auto sx = eval_diffusion(model, smp.x, mu);
    const auto sy = eval_diffusion(model, smp.y, nu);

    const double lhs1 = std::max(dot(bx, bx), hs_norm_squared(sx));
    const double rhs1 = k.c0 * (1.0 + dot(smp.x, smp.x) + smp.mu.second_moment());
    record(report, s, 1, lhs1, rhs1);

    const auto db = minus(bx, by);
    const auto dxy = minus(smp.x, smp.y);
    const double lhs2 = std::max(dot(db, db), hs_norm_squared(minus(sx, sy)));
    const double rhs2 = k.a * dot(dxy, dxy) + k.b * w2_squared(smp.mu, smp.nu);
    record(report, s, 2, lhs2, rhs2);
  }
  return report;
}

bool check_assumption4(const AssumptionConstants& k) { return k.a + k.b < k.alpha - k.beta; }

}  // namespace mvsim
