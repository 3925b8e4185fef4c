#include "mvsim/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mvsim/errors.hpp"

namespace mvsim {

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::Interacting:
      return "interacting";
    case EnsembleKind::NonInteractingClones:
      return "clones";
    case EnsembleKind::SelfConsistent:
      return "selfconsistent";
  }
  return "unknown";
}

StepThresholds compute_thresholds(const AssumptionConstants& k, double safety) {
  if (!(safety > 0.0 && safety < 1.0)) {
    throw std::invalid_argument("compute_thresholds: safety must lie in (0, 1)");
  }
  if (!(k.gamma > k.kappa)) throw std::invalid_argument("compute_thresholds: need gamma > kappa");
  if (!(k.alpha > k.beta)) throw std::invalid_argument("compute_thresholds: need alpha > beta");
  if (!(k.c0 > 0.0) || !(k.a + k.b > 0.0)) {
    throw std::invalid_argument("compute_thresholds: need c0 > 0 and a + b > 0");
  }
  StepThresholds t;
  t.h_star = safety * std::min(1.0, (k.gamma - k.kappa) / (2.0 * k.c0));
  t.h_double_star = safety * std::min(1.0, (k.alpha - k.beta) / (k.a + k.b));
  t.h_sharp = std::min(t.h_star, t.h_double_star);
  t.xi1 = k.alpha - k.beta - (k.a + k.b) * t.h_double_star;
  return t;
}

double moment_factor(const AssumptionConstants& k, double h) {
  return 1.0 - (k.gamma - k.kappa) * h + 2.0 * k.c0 * h * h;
}

double moment_offset(const AssumptionConstants& k, double h) {
  return k.c0 * h * h + h * k.kappa * (1.0 + k.rho);
}

double contraction_factor(const AssumptionConstants& k, double h) {
  return 1.0 - (k.alpha - k.beta) * h + (k.a + k.b) * h * h;
}

double moment_bound(const AssumptionConstants& k, double h, double initial_second_moment) {
  const double a1 = moment_factor(k, h);
  if (!(a1 > 0.0 && a1 < 1.0)) {
    throw std::invalid_argument("moment_bound: A1 = " + std::to_string(a1) +
                                " is outside (0, 1); reduce h below h_star");
  }
  return initial_second_moment + moment_offset(k, h) / (1.0 - a1);
}

InitialLaw InitialLaw::point(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("InitialLaw: empty state");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("InitialLaw: non-finite initial state");
  }
  return InitialLaw(std::move(x), 0.0);
}

InitialLaw InitialLaw::gaussian(std::vector<double> mean, double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("InitialLaw: variance must be finite and non-negative");
  }
  auto law = point(std::move(mean));
  law.variance_ = variance;
  return law;
}

LawState InitialLaw::law() const {
  double sq = 0.0;
  for (double m : mean_) sq += m * m;
  return LawState{mean_, sq + static_cast<double>(mean_.size()) * variance_};
}

void InitialLaw::sample(std::uint64_t seed, std::uint64_t particle_id,
                        std::span<double> out) const {
  if (variance_ == 0.0) {
    std::copy(mean_.begin(), mean_.end(), out.begin());
    return;
  }
  GaussianSource source(substream_seed(seed, particle_id, "initial"));
  const double sd = std::sqrt(variance_);
  for (std::size_t c = 0; c < mean_.size(); ++c) out[c] = mean_[c] + sd * source.next();
}

ParticleEnsemble make_ensemble(const ModelSpec& model, EnsembleKind kind, std::size_t particles,
                               const TimeGrid& grid, const InitialLaw& initial,
                               std::uint64_t seed) {
  if (particles < 1) throw std::invalid_argument("make_ensemble: need at least one particle");
  if (initial.dim() != model.dim) {
    throw std::invalid_argument("make_ensemble: initial law dimension does not match the model");
  }
  ParticleEnsemble ens;
  ens.kind = kind;
  ens.grid = grid;
  ens.dim = model.dim;
  ens.states.resize(particles * model.dim);
  for (std::size_t j = 0; j < particles; ++j) {
    initial.sample(seed, j, std::span<double>(ens.states).subspan(j * model.dim, model.dim));
  }
  if (kind != EnsembleKind::Interacting) {
    if (model.law_mode == LawMode::ExactLinear) {
      ens.law = initial.law();
    } else if (kind == EnsembleKind::SelfConsistent) {
      throw UnsupportedLawError("model '" + model.name +
                                "' has no exact law recursion; the self-consistent scheme "
                                "needs law_mode = ExactLinear");
    }
  }
  return ens;
}

EmStepper::EmStepper(const ModelSpec& model)
    : model_(&model),
      drift_(model.dim),
      diffusion_(model.dim * model.dim),
      next_(model.dim) {}

bool EmStepper::step(std::span<double> x, const MeasureView& mu, double h,
                     std::span<const double> dw) {
  const std::size_t d = model_->dim;
  model_->drift(x, mu, drift_);
  model_->diffusion(x, mu, diffusion_);
  bool finite = true;
  for (std::size_t i = 0; i < d; ++i) {
    double noise = 0.0;
    for (std::size_t j = 0; j < d; ++j) noise += diffusion_[i * d + j] * dw[j];
    next_[i] = x[i] + h * drift_[i] + noise;
    finite = finite && std::isfinite(next_[i]);
  }
  std::copy(next_.begin(), next_.end(), x.begin());
  return finite;
}

namespace {

void require_increments(const ParticleEnsemble& ens, std::span<const double> increments,
                        const char* who) {
  if (increments.size() != ens.states.size()) {
    throw std::invalid_argument(std::string(who) + ": need one increment of dimension " +
                                std::to_string(ens.dim) + " per particle");
  }
}

[[noreturn]] void blow_up(std::size_t particle, std::size_t step, const char* scheme) {
  throw BlowUpError(particle, step,
                    std::string(scheme) + ": particle " + std::to_string(particle) +
                        " left the finite range at step " + std::to_string(step));
}

}  // namespace

ParticleEnsemble em_step_interacting(const ModelSpec& model, ParticleEnsemble ens,
                                     std::span<const double> increments) {
  if (ens.kind != EnsembleKind::Interacting) {
    throw std::invalid_argument("em_step_interacting: ensemble is not an interacting system");
  }
  require_increments(ens, increments, "em_step_interacting");
  const EmpiricalMeasure snapshot(ens.states, ens.dim);
  const auto view = MeasureView::empirical(snapshot);
  EmStepper stepper(model);
  const std::size_t d = ens.dim;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    auto x = std::span<double>(ens.states).subspan(j * d, d);
    if (!stepper.step(x, view, ens.grid.h, increments.subspan(j * d, d))) {
      blow_up(j, ens.time_index + 1, "interacting EM");
    }
  }
  ++ens.time_index;
  return ens;
}

ParticleEnsemble em_step_clones(const ModelSpec& model, ParticleEnsemble ens,
                                std::span<const double> increments,
                                const EmpiricalMeasure* proxy_law) {
  if (ens.kind == EnsembleKind::Interacting) {
    throw std::invalid_argument("em_step_clones: ensemble is an interacting system");
  }
  require_increments(ens, increments, "em_step_clones");
  const bool exact = model.law_mode == LawMode::ExactLinear;
  if (!exact && proxy_law == nullptr) {
    throw UnsupportedLawError("model '" + model.name +
                              "' has no exact law; clones need a proxy law ensemble");
  }
  if (exact && !ens.law) throw std::invalid_argument("em_step_clones: ensemble carries no law");
  const auto view = exact ? MeasureView::closed_form(*ens.law) : MeasureView::empirical(*proxy_law);
  EmStepper stepper(model);
  const std::size_t d = ens.dim;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    auto x = std::span<double>(ens.states).subspan(j * d, d);
    if (!stepper.step(x, view, ens.grid.h, increments.subspan(j * d, d))) {
      blow_up(j, ens.time_index + 1, "clone EM");
    }
  }
  if (exact) ens.law = model.law_step(*ens.law, ens.grid.h);
  ++ens.time_index;
  return ens;
}

SelfConsistentStep em_step_selfconsistent(const ModelSpec& model, std::span<const double> x,
                                          const LawState& law, std::span<const double> increment,
                                          double h) {
  if (model.law_mode != LawMode::ExactLinear) {
    throw UnsupportedLawError("model '" + model.name + "' has no exact law recursion");
  }
  if (x.size() != model.dim || increment.size() != model.dim) {
    throw std::invalid_argument("em_step_selfconsistent: dimension mismatch");
  }
  SelfConsistentStep out{std::vector<double>(x.begin(), x.end()), {}};
  EmStepper stepper(model);
  if (!stepper.step(out.state, MeasureView::closed_form(law), h, increment)) {
    blow_up(0, 1, "self-consistent EM");
  }
  out.law = model.law_step(law, h);
  return out;
}

std::vector<LawState> law_trajectory(const ModelSpec& model, const LawState& initial, double h,
                                     std::size_t n_steps) {
  if (model.law_mode != LawMode::ExactLinear || !model.law_step) {
    throw UnsupportedLawError("model '" + model.name + "' has no exact law recursion");
  }
  std::vector<LawState> laws;
  laws.reserve(n_steps + 1);
  laws.push_back(initial);
  for (std::size_t k = 0; k < n_steps; ++k) laws.push_back(model.law_step(laws.back(), h));
  return laws;
}

namespace {

Snapshot take_snapshot(const ParticleEnsemble& ens, bool keep_states) {
  Snapshot s;
  s.step = ens.time_index;
  s.time = ens.time();
  s.mean.assign(ens.dim, 0.0);
  double sq = 0.0;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    for (std::size_t c = 0; c < ens.dim; ++c) {
      const double x = ens.states[j * ens.dim + c];
      s.mean[c] += x;
      sq += x * x;
    }
  }
  const double inv = 1.0 / static_cast<double>(ens.size());
  for (double& m : s.mean) m *= inv;
  s.second_moment = sq * inv;
  if (keep_states) s.states = ens.states;
  return s;
}

}  // namespace

TrajectoryRecord simulate(const ModelSpec& model, const SimulationConfig& cfg) {
  TrajectoryRecord record;
  const std::size_t n_steps = steps_for(cfg.h, cfg.horizon);
  if (model.constants) {
    const auto t = compute_thresholds(*model.constants, cfg.threshold_safety);
    if (cfg.h >= t.h_sharp) {
      record.warnings.push_back("step size h = " + std::to_string(cfg.h) +
                                " is not below h_sharp = " + std::to_string(t.h_sharp));
    }
  }
  // A zero horizon still needs a valid step for the ensemble's grid.
  const TimeGrid grid = TimeGrid::make(cfg.h, std::max<std::size_t>(n_steps, 1));
  auto ens = make_ensemble(model, cfg.kind, cfg.particles, grid, cfg.initial, cfg.seed);
  const std::size_t thinning = std::max<std::size_t>(cfg.thinning, 1);
  record.snapshots.push_back(take_snapshot(ens, cfg.keep_states));
  if (n_steps == 0) return record;

  const std::size_t d = model.dim;
  std::vector<BrownianCursor> cursors;
  cursors.reserve(cfg.particles);
  for (std::size_t j = 0; j < cfg.particles; ++j) cursors.emplace_back(cfg.seed, j, cfg.h, d);

  const bool needs_proxy =
      cfg.kind != EnsembleKind::Interacting && model.law_mode != LawMode::ExactLinear;
  std::optional<ParticleEnsemble> proxy;
  std::vector<BrownianCursor> proxy_cursors;
  std::vector<double> proxy_dw;
  if (needs_proxy) {
    const std::size_t n_ref =
        cfg.proxy_particles ? cfg.proxy_particles : std::max<std::size_t>(10 * cfg.particles, 1000);
    const std::uint64_t proxy_seed = substream_seed(cfg.seed, 0, "proxy");
    proxy = make_ensemble(model, EnsembleKind::Interacting, n_ref, grid, cfg.initial, proxy_seed);
    for (std::size_t j = 0; j < n_ref; ++j) proxy_cursors.emplace_back(proxy_seed, j, cfg.h, d);
    proxy_dw.resize(n_ref * d);
    record.warnings.push_back("law proxy: interacting reference ensemble of " +
                              std::to_string(n_ref) + " particles");
  }

  std::vector<double> dw(cfg.particles * d);
  for (std::size_t k = 0; k < n_steps; ++k) {
    for (std::size_t j = 0; j < cfg.particles; ++j) {
      cursors[j].advance(std::span<double>(dw).subspan(j * d, d));
    }
    if (cfg.kind == EnsembleKind::Interacting) {
      ens = em_step_interacting(model, std::move(ens), dw);
    } else if (proxy) {
      const EmpiricalMeasure law(proxy->states, d);
      ens = em_step_clones(model, std::move(ens), dw, &law);
      for (std::size_t j = 0; j < proxy_cursors.size(); ++j) {
        proxy_cursors[j].advance(std::span<double>(proxy_dw).subspan(j * d, d));
      }
      proxy = em_step_interacting(model, std::move(*proxy), proxy_dw);
    } else {
      ens = em_step_clones(model, std::move(ens), dw);
    }
    if ((k + 1) % thinning == 0 || k + 1 == n_steps) {
      record.snapshots.push_back(take_snapshot(ens, cfg.keep_states));
    }
  }
  return record;
}

}  // namespace mvsim
