#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsim/errors.hpp"
#include "mvsim/measure.hpp"

namespace mvsim {

/// Closed-form law summary (mean, mu(|.|^2)) used when the law of the
/// scheme evolves by an exact recursion.
struct LawState {
  std::vector<double> mean;
  double second_moment = 0.0;
};

/// The measure argument handed to the coefficients: either a full empirical
/// measure or a closed-form (mean, second moment) summary. Non-owning.
class MeasureView {
 public:
  static MeasureView empirical(const EmpiricalMeasure& mu) noexcept;
  /// Throws if second_moment < |mean|^2 beyond rounding.
  static MeasureView closed_form(const LawState& law);

  std::span<const double> mean() const noexcept { return mean_; }
  double second_moment() const noexcept { return second_moment_; }
  /// Null for closed-form views.
  const EmpiricalMeasure* empirical_measure() const noexcept { return empirical_; }

 private:
  MeasureView(std::span<const double> mean, double second_moment, const EmpiricalMeasure* emp)
      : mean_(mean), second_moment_(second_moment), empirical_(emp) {}

  std::span<const double> mean_;
  double second_moment_;
  const EmpiricalMeasure* empirical_;
};

/// Constants of the monotonicity, dissipativity, growth and Lipschitz
/// conditions. Declared by the user; never inferred.
struct AssumptionConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double rho = 0.0;
  double c0 = 0.0;
  double a = 0.0;
  double b = 0.0;

  /// alpha > beta >= 0, gamma > kappa >= 0, rho > 0, c0, a, b > 0.
  void validate() const;
};

enum class LawMode { ExactLinear, EmpiricalOnly };

struct LinearMeanFieldParams {
  double lambda = 1.2;
  double theta = 0.4;
  double sigma0 = 1.0;
};

/// b(x, mu) written into `out` (size d).
using DriftFn = std::function<void(std::span<const double> x, const MeasureView& mu,
                                   std::span<double> out)>;
/// sigma(x, mu) written into `out` as a row-major d x d matrix.
using DiffusionFn = std::function<void(std::span<const double> x, const MeasureView& mu,
                                       std::span<double> out)>;
/// One EM step of the law of the self-consistent scheme.
using LawStepFn = std::function<LawState(const LawState& law, double h)>;

struct ModelSpec {
  std::string name;
  std::size_t dim = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  std::optional<AssumptionConstants> constants;
  LawMode law_mode = LawMode::EmpiricalOnly;
  LawStepFn law_step;  // required when law_mode == ExactLinear
  /// Set for the built-in linear model; enables closed-form oracles.
  std::optional<LinearMeanFieldParams> linear;
};

/// dX = (-lambda X + theta E X) dt + sigma0 dW in d = 1.
/// Requires lambda > theta >= 0 and sigma0 >= 0.
ModelSpec make_linear_mean_field(const LinearMeanFieldParams& params,
                                 std::optional<AssumptionConstants> constants = std::nullopt);

std::vector<double> eval_drift(const ModelSpec& model, std::span<const double> x,
                               const MeasureView& mu);
std::vector<double> eval_diffusion(const ModelSpec& model, std::span<const double> x,
                                   const MeasureView& mu);

/// Frobenius (Hilbert-Schmidt) norm squared of a row-major matrix.
double hs_norm_squared(std::span<const double> matrix) noexcept;

struct AssumptionSample {
  std::vector<double> x;
  std::vector<double> y;
  EmpiricalMeasure mu;
  EmpiricalMeasure nu;
};

/// Uniform states in [lo, hi]^d and empirical measures of `measure_size`
/// uniform points in the same box.
std::vector<AssumptionSample> draw_assumption_samples(std::size_t dim, std::size_t count,
                                                      double lo, double hi,
                                                      std::size_t measure_size,
                                                      std::uint64_t seed);

struct Violation {
  std::size_t sample = 0;
  int inequality = 1;  // which inequality of the pair
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs (negative when violated)
};

/// Falsification-only evidence: zero violations proves nothing.
struct CheckReport {
  std::string assumption;
  std::size_t samples_checked = 0;
  std::vector<Violation> violations;

  bool clean() const noexcept { return violations.empty(); }
  std::size_t count(int inequality) const noexcept;
};

/// Monotonicity and dissipativity inequalities with the declared constants.
CheckReport check_assumption2(const ModelSpec& model, std::span<const AssumptionSample> samples);
CheckReport check_assumption2(const ModelSpec& model, const AssumptionConstants& constants,
                              std::span<const AssumptionSample> samples);

/// Linear growth and Lipschitz inequalities with the declared constants.
CheckReport check_assumption3(const ModelSpec& model, std::span<const AssumptionSample> samples);
CheckReport check_assumption3(const ModelSpec& model, const AssumptionConstants& constants,
                              std::span<const AssumptionSample> samples);

/// a + b < alpha - beta.
bool check_assumption4(const AssumptionConstants& constants);

}  // namespace mvsim
