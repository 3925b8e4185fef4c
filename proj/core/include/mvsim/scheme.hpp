#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsim/brownian.hpp"
#include "mvsim/model.hpp"

namespace mvsim {

enum class EnsembleKind { Interacting, NonInteractingClones, SelfConsistent };

std::string to_string(EnsembleKind kind);

/// Step-size thresholds below which the moment factor A1 and the
/// contraction factor A3 are strictly less than one.
struct StepThresholds {
  double h_star = 0.0;
  double h_double_star = 0.0;
  double h_sharp = 0.0;  // min(h_star, h_double_star)
  double xi1 = 0.0;      // alpha - beta - (a + b) h_double_star
};

/// h_star = safety * min(1, (gamma - kappa) / (2 c0)),
/// h_double_star = safety * min(1, (alpha - beta) / (a + b)).
StepThresholds compute_thresholds(const AssumptionConstants& constants, double safety);

/// A1 = 1 - (gamma - kappa) h + 2 c0 h^2.
double moment_factor(const AssumptionConstants& constants, double h);
/// A2 = c0 h^2 + h kappa (1 + rho).
double moment_offset(const AssumptionConstants& constants, double h);
/// A3 = 1 - (alpha - beta) h + (a + b) h^2.
double contraction_factor(const AssumptionConstants& constants, double h);
/// C1 = E|X0|^2 + A2 / (1 - A1); throws unless A1 lies in (0, 1).
double moment_bound(const AssumptionConstants& constants, double h, double initial_second_moment);

/// Initial distribution shared by every particle: a point mass or an
/// isotropic Gaussian.
class InitialLaw {
 public:
  static InitialLaw point(std::vector<double> x);
  static InitialLaw gaussian(std::vector<double> mean, double variance);

  std::size_t dim() const noexcept { return mean_.size(); }
  bool is_point_mass() const noexcept { return variance_ == 0.0; }
  std::span<const double> mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  /// Exact law summary of X0.
  LawState law() const;
  /// Draw of X0 for one particle; a pure function of (seed, particle_id).
  void sample(std::uint64_t seed, std::uint64_t particle_id, std::span<double> out) const;

 private:
  InitialLaw(std::vector<double> mean, double variance)
      : mean_(std::move(mean)), variance_(variance) {}

  std::vector<double> mean_;
  double variance_;
};

/// N particle states at grid index `time_index`. Self-consistent and
/// exact-law clone ensembles carry the law summary they are advanced with.
struct ParticleEnsemble {
  EnsembleKind kind = EnsembleKind::Interacting;
  TimeGrid grid;
  std::size_t dim = 1;
  std::size_t time_index = 0;
  std::vector<double> states;  // row-major N x dim
  std::optional<LawState> law;

  std::size_t size() const noexcept { return dim == 0 ? 0 : states.size() / dim; }
  std::span<const double> state(std::size_t j) const {
    return std::span<const double>(states).subspan(j * dim, dim);
  }
  double time() const noexcept { return grid.h * static_cast<double>(time_index); }
};

ParticleEnsemble make_ensemble(const ModelSpec& model, EnsembleKind kind, std::size_t particles,
                               const TimeGrid& grid, const InitialLaw& initial,
                               std::uint64_t seed);

/// Reusable scratch for x <- x + h b(x, mu) + sigma(x, mu) dw.
class EmStepper {
 public:
  explicit EmStepper(const ModelSpec& model);

  /// Returns false if any coordinate of the new state is not finite.
  bool step(std::span<double> x, const MeasureView& mu, double h, std::span<const double> dw);

 private:
  const ModelSpec* model_;
  std::vector<double> drift_;
  std::vector<double> diffusion_;
  std::vector<double> next_;
};

/// One synchronous step of the interacting system: every particle sees the
/// empirical measure of the ensemble taken before any update.
/// `increments` is row-major N x dim.
ParticleEnsemble em_step_interacting(const ModelSpec& model, ParticleEnsemble ensemble,
                                     std::span<const double> increments);

/// One step of the non-interacting clones. Each clone is driven by the shared
/// law: the closed-form LawState for exact-law models, or `proxy_law` (an
/// empirical stand-in) otherwise. Never uses the clones' own empirical measure.
ParticleEnsemble em_step_clones(const ModelSpec& model, ParticleEnsemble ensemble,
                                std::span<const double> increments,
                                const EmpiricalMeasure* proxy_law = nullptr);

struct SelfConsistentStep {
  std::vector<double> state;
  LawState law;
};

/// Single-path step of the exact-law scheme; the law advances alongside.
SelfConsistentStep em_step_selfconsistent(const ModelSpec& model, std::span<const double> x,
                                          const LawState& law, std::span<const double> increment,
                                          double h);

/// law_k for k = 0..n_steps under the model's exact law recursion.
std::vector<LawState> law_trajectory(const ModelSpec& model, const LawState& initial, double h,
                                     std::size_t n_steps);

struct SimulationConfig {
  EnsembleKind kind = EnsembleKind::SelfConsistent;
  std::size_t particles = 1;
  double h = 0.01;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  InitialLaw initial = InitialLaw::point({0.0});
  std::size_t thinning = 1;  // record every `thinning` steps (and the last)
  bool keep_states = false;
  /// Size of the interacting reference ensemble used as a law proxy for
  /// clones of models without an exact law; 0 selects max(10 N, 1000).
  std::size_t proxy_particles = 0;
  double threshold_safety = 0.9;
};

struct Snapshot {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<double> mean;
  double second_moment = 0.0;
  std::vector<double> states;  // empty unless keep_states
};

struct TrajectoryRecord {
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
};

/// Runs the chosen scheme over [0, horizon]; particle j is driven by the
/// Brownian substream (seed, j). Deterministic in (seed, config).
TrajectoryRecord simulate(const ModelSpec& model, const SimulationConfig& config);

}  // namespace mvsim
