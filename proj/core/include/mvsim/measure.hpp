#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvsim {

/// Equal-weight empirical measure (1/N) sum delta_{x_i} over points in R^d.
///
/// Points are stored row-major. Mean and second moment are computed once at
/// construction, in index order, so coefficient evaluations that only need
/// the moments stay O(1) per call.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::vector<double> points, std::size_t dim);

  static EmpiricalMeasure from_scalars(std::vector<double> xs) {
    return EmpiricalMeasure(std::move(xs), 1);
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points_).subspan(i * dim_, dim_);
  }
  std::span<const double> mean() const noexcept { return mean_; }
  /// mu(|.|^2)
  double second_moment() const noexcept { return second_moment_; }

 private:
  std::vector<double> points_;
  std::size_t dim_;
  std::size_t size_;
  std::vector<double> mean_;
  double second_moment_ = 0.0;
};

struct Moments {
  std::vector<double> mean;
  double second_moment = 0.0;
};

Moments moments(const EmpiricalMeasure& mu);

inline constexpr std::size_t kDefaultAssignmentCap = 2048;

/// Exact W2 for d = 1 through the sorted (monotone) coupling.
double w2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Exact W2 in any dimension via optimal assignment on squared distances.
double w2_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     std::size_t cap = kDefaultAssignmentCap);

/// W2 between N(m1, v1) and N(m2, v2) on the real line.
double w2_gaussian(double m1, double v1, double m2, double v2);

/// W_p with the outer exponent 1/(1 v p), so p < 1 returns the raw optimal
/// mean cost. Sorted matching is used for d = 1 and p >= 1; otherwise the
/// assignment solver.
double wp_empirical(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                    std::size_t cap = kDefaultAssignmentCap);

enum class DensityMethod { Histogram, GaussianKde };

struct DensityOptions {
  DensityMethod method = DensityMethod::GaussianKde;
  std::size_t bins = 64;          // histogram only
  double bandwidth = 0.0;         // KDE only; 0 selects Silverman's rule
  std::size_t grid_points = 512;  // KDE only
  /// Evaluation range. Unset: data range padded by 6 bandwidths (KDE) or one
  /// empty bin per side (histogram).
  std::optional<std::pair<double, double>> range;
};

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double width = 0.0;  // bandwidth (KDE) or bin width (histogram)
  bool degenerate = false;  // all samples identical
};

/// 1D density estimate normalised to unit trapezoid integral.
DensityEstimate density_1d(const EmpiricalMeasure& mu, const DensityOptions& options = {});

double silverman_bandwidth(std::span<const double> xs);
double trapezoid_integral(const DensityEstimate& estimate);

/// Largest pointwise gap between two estimates evaluated on the same grid.
double sup_distance(const DensityEstimate& a, const DensityEstimate& b);

/// KDE sup-distance between two samples on a shared grid covering both.
/// Both estimates use one bandwidth: bandwidth_factor times the larger of
/// the two Silverman bandwidths.
double kde_sup_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        std::size_t grid_points = 1024, double bandwidth_factor = 1.0);

/// Two-column RFC-4180 CSV: grid,density.
std::string to_csv(const DensityEstimate& estimate);

/// Equal-size sample of N(mean, variance) at the midpoint quantiles (i + 1/2)/n.
std::vector<double> normal_quantile_sample(double mean, double variance, std::size_t n);

}  // namespace mvsim
