#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mvsim/measure.hpp"
#include "mvsim/model.hpp"
#include "mvsim/report.hpp"
#include "mvsim/scheme.hpp"

namespace mvsim {

/// Fixed partition used for every Monte Carlo reduction. Results depend on
/// this constant, never on the worker count.
inline constexpr std::size_t kStudyBlocks = 16;

/// Least-squares fit of ln y against ln x. Needs >= 3 points, all positive.
SlopeFit loglog_slope(std::span<const double> xs, std::span<const double> ys);

struct SlopeTolerance {
  double target = 0.0;
  double tolerance = 0.0;
  double min_r_squared = 0.95;
};

/// Pass when |slope - target| <= tolerance; inconclusive when r^2 is below
/// the floor, whatever the slope.
Verdict slope_verdict(std::string name, const SlopeFit& fit, const SlopeTolerance& tol);

/// Where strong errors are sampled.
///  Reference: at every reference-grid time, the coarse path held constant
///             between its own nodes (the piecewise-constant EM interpolant).
///  Coarse:    only at the coarse nodes shared with the reference grid.
enum class ErrorGrid { Reference, Coarse };

struct StrongConvergenceParams {
  std::vector<double> h_set;
  double h_ref = 0.0;  // 0 selects 2^-10 max(h_set)
  std::size_t paths = 10000;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  InitialLaw initial = InitialLaw::point({0.0});
  ErrorGrid error_grid = ErrorGrid::Reference;
  SlopeTolerance tolerance{0.5, 0.1, 0.95};
  unsigned threads = 0;
};

/// Root-mean-square gap between self-consistent EM paths at each h and at
/// h_ref, driven by one Brownian path per sample; slope of sup-RMSE vs h.
StudyReport study_strong_convergence(const ModelSpec& model, const StrongConvergenceParams& p);

struct ChaosParams {
  std::vector<std::size_t> particle_counts;
  double h = 0.001;
  double horizon = 1.0;
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  InitialLaw initial = InitialLaw::point({6.0});
  std::size_t proxy_particles = 0;  // 0 selects max(10 N, 1000) for proxy-law models
  SlopeTolerance tolerance{-1.0, 0.15, 0.95};
  double monotone_slack = 0.1;
  unsigned threads = 0;
};

/// sup_k E|X^{N,j}_k - X^j_k|^2 between the interacting system and clones on
/// shared streams, for each N; slope of the chaos error vs N.
StudyReport study_chaos_vs_n(const ModelSpec& model, const ChaosParams& p);

struct ErrorVsHParams {
  std::vector<double> h_set;
  double h_ref = 0.0;  // 0 selects 2^-10 max(h_set)
  std::size_t particles = 100;
  double horizon = 1.0;
  std::size_t replicates = 50;
  std::uint64_t seed = 0;
  InitialLaw initial = InitialLaw::point({0.0});
  SlopeTolerance tolerance{1.0, 0.2, 0.95};
  double ratio_tolerance = 0.5;  // MSE(4h)/MSE(h) within 4 (1 +- tol)
  unsigned threads = 0;
};

/// Mean-square gap between the interacting system at each h and at h_ref on
/// shared streams; slope of sup-MSE vs h at fixed N.
StudyReport study_error_vs_h(const ModelSpec& model, const ErrorVsHParams& p);

struct InvariantMeasureParams {
  std::vector<double> h_set;
  std::size_t paths = 10000;
  double horizon = 30.0;
  std::vector<double> initials{-6.0, 6.0, 16.0};
  bool synchronous = false;  // share Brownian streams across initial values
  std::uint64_t seed = 0;
  double existence_tolerance = 0.05;
  double uniqueness_tolerance = 0.05;
  double discrete_tolerance = 0.02;
  double rate_noise_allowance = 0.02;
  unsigned threads = 0;
};

/// Long-run laws of the self-consistent scheme (d = 1): stabilisation in
/// time, independence of the initial value, and distance to the analytic
/// stationary laws of the linear model.
StudyReport study_invariant_measure(const ModelSpec& model, const InvariantMeasureParams& p);

struct ContractionParams {
  std::vector<double> x{-6.0};
  std::vector<double> y{6.0};
  double h = 0.01;
  double horizon = 10.0;
  std::size_t paths = 1000;
  std::uint64_t seed = 0;
  double closed_form_tolerance = 1e-10;
  double threshold_safety = 0.9;
  unsigned threads = 0;
};

/// Synchronously coupled self-consistent paths from x and y; decay of
/// E|X - Y|^2 against xi1 and, for the linear model, the exact geometric law.
StudyReport study_contraction(const ModelSpec& model, const ContractionParams& p);

struct MomentBoundParams {
  double h = 0.005;
  double horizon = 50.0;
  std::size_t paths = 10000;
  InitialLaw initial = InitialLaw::point({6.0});
  std::uint64_t seed = 0;
  double stderr_multiplier = 3.0;
  double threshold_safety = 0.9;
  unsigned threads = 0;
};

/// Running second moment of the self-consistent scheme against C1.
StudyReport study_moment_bound(const ModelSpec& model, const MomentBoundParams& p);

struct DensityEvolutionParams {
  EnsembleKind kind = EnsembleKind::SelfConsistent;
  std::size_t particles = 10000;
  double h = 0.01;
  std::vector<double> times;
  std::vector<double> initials{6.0};
  bool synchronous = false;
  DensityMethod method = DensityMethod::GaussianKde;
  std::size_t bins = 64;
  double bandwidth = 0.0;
  std::size_t grid_points = 512;
  /// Two snapshot times (of the first initial value) expected to agree.
  std::optional<std::pair<double, double>> stationary_times;
  /// Agreement checks compare both samples under one bandwidth, this factor
  /// times the larger Silverman bandwidth.
  double compare_bandwidth_factor = 3.0;
  double stationary_tolerance = 0.03;
  double initials_tolerance = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Density snapshots (d = 1) per initial value and time, with sup-distance
/// checks between late snapshots and across initial values.
StudyReport study_density_evolution(const ModelSpec& model, const DensityEvolutionParams& p);

}  // namespace mvsim
