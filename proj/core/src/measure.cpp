#include "mvsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "mvsim/assignment.hpp"
#include "mvsim/report.hpp"

namespace mvsim {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points, std::size_t dim)
    : points_(std::move(points)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("EmpiricalMeasure: dimension must be >= 1");
  if (points_.empty() || points_.size() % dim_ != 0) {
    throw std::invalid_argument("EmpiricalMeasure: need at least one point of the given dimension");
  }
  size_ = points_.size() / dim_;
  mean_.assign(dim_, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < size_; ++i) {
    for (std::size_t c = 0; c < dim_; ++c) {
      const double x = points_[i * dim_ + c];
      if (!std::isfinite(x)) {
        throw std::invalid_argument("EmpiricalMeasure: point " + std::to_string(i) +
                                    " has a non-finite coordinate");
      }
      mean_[c] += x;
      sq += x * x;
    }
  }
  const double inv = 1.0 / static_cast<double>(size_);
  for (double& m : mean_) m *= inv;
  second_moment_ = sq * inv;
}

Moments moments(const EmpiricalMeasure& mu) {
  return Moments{std::vector<double>(mu.mean().begin(), mu.mean().end()), mu.second_moment()};
}

namespace {

void require_same_size(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const char* who) {
  if (mu.size() != nu.size()) {
    throw std::invalid_argument(std::string(who) + ": measures must have equal sample counts (" +
                                std::to_string(mu.size()) + " vs " + std::to_string(nu.size()) +
                                ")");
  }
  if (mu.dim() != nu.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

double sorted_mean_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  const auto a = sorted_copy(mu.points());
  const auto b = sorted_copy(nu.points());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double gap = std::abs(a[i] - b[i]);
    total += p == 2.0 ? gap * gap : std::pow(gap, p);
  }
  return total / static_cast<double>(a.size());
}

double assignment_mean_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                            std::size_t cap) {
  const std::size_t n = mu.size();
  if (n > cap) {
    throw std::invalid_argument("w2_assignment: N = " + std::to_string(n) + " exceeds the cap of " +
                                std::to_string(cap) +
                                "; use w2_1d for d = 1 or subsample the measures");
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = mu.point(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto y = nu.point(j);
      double sq = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) sq += (x[c] - y[c]) * (x[c] - y[c]);
      cost[i * n + j] = p == 2.0 ? sq : std::pow(std::sqrt(sq), p);
    }
  }
  return solve_assignment(cost, n).cost / static_cast<double>(n);
}

}  // namespace

double w2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require_same_size(mu, nu, "w2_1d");
  if (mu.dim() != 1) throw std::invalid_argument("w2_1d: measures must be one-dimensional");
  return std::sqrt(sorted_mean_cost(mu, nu, 2.0));
}

double w2_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap) {
  require_same_size(mu, nu, "w2_assignment");
  return std::sqrt(assignment_mean_cost(mu, nu, 2.0, cap));
}

double w2_gaussian(double m1, double v1, double m2, double v2) {
  if (v1 < 0.0 || v2 < 0.0) throw std::invalid_argument("w2_gaussian: negative variance");
  const double dm = m1 - m2;
  const double ds = std::sqrt(v1) - std::sqrt(v2);
  return std::sqrt(dm * dm + ds * ds);
}

double wp_empirical(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                    std::size_t cap) {
  require_same_size(mu, nu, "wp_empirical");
  if (!(p > 0.0)) throw std::invalid_argument("wp_empirical: p must be positive");
  const double mean_cost = (mu.dim() == 1 && p >= 1.0) ? sorted_mean_cost(mu, nu, p)
                                                      : assignment_mean_cost(mu, nu, p, cap);
  return std::pow(mean_cost, 1.0 / std::max(1.0, p));
}

double silverman_bandwidth(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("silverman_bandwidth: need at least two samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  auto sorted = sorted_copy(xs);
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

namespace {

void normalise(DensityEstimate& est) {
  const double mass = trapezoid_integral(est);
  if (mass > 0.0) {
    for (double& f : est.density) f /= mass;
  }
}

DensityEstimate histogram(std::span<const double> xs, const DensityOptions& opt, bool degenerate) {
  const std::size_t bins = std::max<std::size_t>(opt.bins, 1);
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (opt.range) {
    lo = opt.range->first;
    hi = opt.range->second;
  }
  double width = (hi - lo) / static_cast<double>(bins);
  if (!(width > 0.0)) {
    width = 1.0;
    lo -= 0.5 * width * static_cast<double>(bins);
  }
  std::vector<double> counts(bins, 0.0);
  for (double x : xs) {
    auto idx = static_cast<std::ptrdiff_t>(std::floor((x - lo) / width));
    if (idx == static_cast<std::ptrdiff_t>(bins)) idx -= 1;  // right edge belongs to the last bin
    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(bins)) continue;
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  // One empty bin on each side makes the trapezoid integral of the centre
  // values equal to the histogram mass.
  DensityEstimate est;
  est.width = width;
  est.degenerate = degenerate;
  est.grid.reserve(bins + 2);
  est.density.reserve(bins + 2);
  const double scale = 1.0 / (static_cast<double>(xs.size()) * width);
  for (std::size_t b = 0; b < bins + 2; ++b) {
    est.grid.push_back(lo + (static_cast<double>(b) - 0.5) * width);
    est.density.push_back(b == 0 || b == bins + 1 ? 0.0 : counts[b - 1] * scale);
  }
  normalise(est);
  return est;
}

DensityEstimate gaussian_kde(std::span<const double> xs, const DensityOptions& opt) {
  const double bw = opt.bandwidth > 0.0 ? opt.bandwidth : silverman_bandwidth(xs);
  if (!(bw > 0.0)) throw std::invalid_argument("density_1d: bandwidth must be positive");
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double lo = *lo_it - 6.0 * bw;
  double hi = *hi_it + 6.0 * bw;
  if (opt.range) {
    lo = opt.range->first;
    hi = opt.range->second;
  }
  const std::size_t m = std::max<std::size_t>(opt.grid_points, 2);
  DensityEstimate est;
  est.width = bw;
  est.grid.resize(m);
  est.density.assign(m, 0.0);
  const double step = (hi - lo) / static_cast<double>(m - 1);
  for (std::size_t g = 0; g < m; ++g) est.grid[g] = lo + step * static_cast<double>(g);

  auto sorted = sorted_copy(xs);
  const double norm = 1.0 / (static_cast<double>(xs.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
  const double cutoff = 9.0 * bw;  // exp(-40.5) is below double resolution of the sum
  for (std::size_t g = 0; g < m; ++g) {
    const double x = est.grid[g];
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
    auto last = std::upper_bound(first, sorted.end(), x + cutoff);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    est.density[g] = acc * norm;
  }
  normalise(est);
  return est;
}

}  // namespace

DensityEstimate density_1d(const EmpiricalMeasure& mu, const DensityOptions& options) {
  if (mu.dim() != 1) throw std::invalid_argument("density_1d: measure must be one-dimensional");
  const auto xs = mu.points();
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const bool degenerate = *lo_it == *hi_it;
  if (options.method == DensityMethod::Histogram) return histogram(xs, options, degenerate);
  if (xs.size() < 2 && options.bandwidth <= 0.0) {
    throw std::invalid_argument("density_1d: automatic KDE bandwidth needs at least two samples");
  }
  if (degenerate && options.bandwidth <= 0.0) {
    throw std::invalid_argument(
        "density_1d: all samples coincide; use a histogram or an explicit bandwidth");
  }
  return gaussian_kde(xs, options);
}

double trapezoid_integral(const DensityEstimate& estimate) {
  double total = 0.0;
  for (std::size_t i = 1; i < estimate.grid.size(); ++i) {
    total += 0.5 * (estimate.density[i] + estimate.density[i - 1]) *
             (estimate.grid[i] - estimate.grid[i - 1]);
  }
  return total;
}

double sup_distance(const DensityEstimate& a, const DensityEstimate& b) {
  if (a.grid.size() != b.grid.size()) {
    throw std::invalid_argument("sup_distance: estimates are on different grids");
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < a.grid.size(); ++i) {
    if (std::abs(a.grid[i] - b.grid[i]) > 1e-12 * (1.0 + std::abs(a.grid[i]))) {
      throw std::invalid_argument("sup_distance: estimates are on different grids");
    }
    sup = std::max(sup, std::abs(a.density[i] - b.density[i]));
  }
  return sup;
}

double kde_sup_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        std::size_t grid_points, double bandwidth_factor) {
  if (!(bandwidth_factor > 0.0)) {
    throw std::invalid_argument("kde_sup_distance: bandwidth factor must be positive");
  }
  const double bw = bandwidth_factor * std::max(silverman_bandwidth(a.points()),
                                                silverman_bandwidth(b.points()));
  auto [a_lo, a_hi] = std::minmax_element(a.points().begin(), a.points().end());
  auto [b_lo, b_hi] = std::minmax_element(b.points().begin(), b.points().end());
  const double pad = 6.0 * bw;
  DensityOptions opt;
  opt.bandwidth = bw;
  opt.grid_points = grid_points;
  opt.range = std::make_pair(std::min(*a_lo, *b_lo) - pad, std::max(*a_hi, *b_hi) + pad);
  return sup_distance(density_1d(a, opt), density_1d(b, opt));
}

std::string to_csv(const DensityEstimate& estimate) {
  std::ostringstream out;
  out << "grid,density\r\n";
  for (std::size_t i = 0; i < estimate.grid.size(); ++i) {
    out << format_real(estimate.grid[i]) << ',' << format_real(estimate.density[i]) << "\r\n";
  }
  return out.str();
}

std::vector<double> normal_quantile_sample(double mean, double variance, std::size_t n) {
  if (variance < 0.0) throw std::invalid_argument("normal_quantile_sample: negative variance");
  std::vector<double> out(n, mean);
  if (variance == 0.0) return out;
  const boost::math::normal_distribution<double> law(mean, std::sqrt(variance));
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = boost::math::quantile(law, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return out;
}

}  // namespace mvsim
