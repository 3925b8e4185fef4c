#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace mvsim {

/// Uniform grid {k h : k = 0..n_steps}.
struct TimeGrid {
  double h = 0.0;
  std::size_t n_steps = 0;

  /// Validates h in (0, 1) and n_steps >= 1.
  static TimeGrid make(double h, std::size_t n_steps);
  /// Grid of step h reaching `horizon` exactly (to 1e-9 relative).
  static TimeGrid covering(double h, double horizon);

  double horizon() const noexcept { return h * static_cast<double>(n_steps); }
};

/// Number of steps of size h in `horizon`; throws unless horizon / h is an
/// integer to 1e-9 relative. Returns 0 for horizon == 0.
std::size_t steps_for(double h, double horizon);

/// Integer ratio coarse / fine; throws unless it is an integer to 1e-9.
std::size_t refinement_factor(double coarse, double fine);

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Seed of an independent substream:
///   mix64(mix64(master ^ mix64(id + 0x9E3779B97F4A7C15)) ^ fnv1a64(tag)).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t id, std::string_view tag) noexcept;

/// Standard normals from std::mt19937_64 via Box-Muller on pairs of
/// uniforms. Every pair of draws consumes exactly two engine outputs.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Lazily generates one particle's Brownian path on a fine grid.
///
/// The cursor keeps the running path value W_k; each advance draws
/// sqrt(h) Z, adds it to W and reports the increment as W_{k+1} - W_k. Any
/// coarser increment is then a difference of path values, which makes
/// coarse-fine coupling exact and composable.
class BrownianCursor {
 public:
  BrownianCursor(std::uint64_t master_seed, std::uint64_t particle_id, double h, std::size_t dim);

  /// Writes the next increment into `increment` (size dim).
  void advance(std::span<double> increment);
  std::span<const double> position() const noexcept { return position_; }
  std::size_t steps_taken() const noexcept { return steps_; }

 private:
  GaussianSource source_;
  double sqrt_h_;
  std::vector<double> position_;
  std::size_t steps_ = 0;
};

/// Materialised Brownian path of one particle; immutable once built.
class IncrementStream {
 public:
  IncrementStream(std::uint64_t seed, std::uint64_t particle_id, TimeGrid grid, std::size_t dim,
                  std::vector<double> path);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t particle_id() const noexcept { return particle_id_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }

  /// Path value W_{kh}, k = 0..n_steps.
  std::span<const double> path_at(std::size_t k) const;
  /// Increment W_{(k+1)h} - W_{kh}, k = 0..n_steps-1.
  std::vector<double> increment(std::size_t k) const;
  /// All increments, row-major n_steps x dim.
  std::vector<double> values() const;

 private:
  std::uint64_t seed_;
  std::uint64_t particle_id_;
  TimeGrid grid_;
  std::size_t dim_;
  std::vector<double> path_;  // (n_steps + 1) x dim
};

/// n_steps i.i.d. N(0, h I_d) increments for (seed, particle_id). Identical
/// to what a BrownianCursor with the same arguments emits.
IncrementStream sample_increments(std::uint64_t seed, std::uint64_t particle_id,
                                  const TimeGrid& grid, std::size_t dim);

/// Same path on the grid of step factor * h. Throws unless factor divides
/// n_steps. Chains compose exactly: coarsen(coarsen(s, a), b) == coarsen(s, a * b).
IncrementStream coarsen(const IncrementStream& stream, std::size_t factor);

/// Debug dump: 16-byte little-endian header {"MVBW", u32 dim, u64 n_steps}
/// followed by n_steps * dim little-endian float64 increments.
void write_stream_binary(std::ostream& out, const IncrementStream& stream);

struct StreamDump {
  std::size_t dim = 0;
  std::size_t n_steps = 0;
  std::vector<double> increments;
};

StreamDump read_stream_binary(std::istream& in);

}  // namespace mvsim
