#include "mvsim/brownian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mvsim {

TimeGrid TimeGrid::make(double h, std::size_t n_steps) {
  if (!(h > 0.0 && h < 1.0)) {
    throw std::invalid_argument("TimeGrid: step size must lie in (0, 1), got " + std::to_string(h));
  }
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
  return TimeGrid{h, n_steps};
}

TimeGrid TimeGrid::covering(double h, double horizon) { return make(h, steps_for(h, horizon)); }

std::size_t steps_for(double h, double horizon) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be non-negative");
  const double ratio = horizon / h;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("horizon " + std::to_string(horizon) +
                                " is not an integer multiple of h = " + std::to_string(h));
  }
  return static_cast<std::size_t>(n);
}

std::size_t refinement_factor(double coarse, double fine) {
  if (!(fine > 0.0) || !(coarse > 0.0)) throw std::invalid_argument("step sizes must be positive");
  const double ratio = coarse / fine;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * ratio) {
    throw std::invalid_argument("step " + std::to_string(coarse) +
                                " is not an integer multiple of the reference step " +
                                std::to_string(fine));
  }
  return static_cast<std::size_t>(n);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t id, std::string_view tag) noexcept {
  return mix64(mix64(master ^ mix64(id + 0x9E3779B97F4A7C15ULL)) ^ fnv1a64(tag));
}

double GaussianSource::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1], u2 in [0, 1), 53 bits each.
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

BrownianCursor::BrownianCursor(std::uint64_t master_seed, std::uint64_t particle_id, double h,
                               std::size_t dim)
    : source_(substream_seed(master_seed, particle_id, "brownian")),
      sqrt_h_(std::sqrt(h)),
      position_(dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("BrownianCursor: dimension must be >= 1");
  if (!(h > 0.0)) throw std::invalid_argument("BrownianCursor: step must be positive");
}

void BrownianCursor::advance(std::span<double> increment) {
  for (std::size_t c = 0; c < position_.size(); ++c) {
    const double before = position_[c];
    position_[c] = before + sqrt_h_ * source_.next();
    increment[c] = position_[c] - before;
  }
  ++steps_;
}

IncrementStream::IncrementStream(std::uint64_t seed, std::uint64_t particle_id, TimeGrid grid,
                                 std::size_t dim, std::vector<double> path)
    : seed_(seed), particle_id_(particle_id), grid_(grid), dim_(dim), path_(std::move(path)) {
  if (path_.size() != (grid_.n_steps + 1) * dim_) {
    throw std::invalid_argument("IncrementStream: path length does not match grid");
  }
}

std::span<const double> IncrementStream::path_at(std::size_t k) const {
  if (k > grid_.n_steps) throw std::out_of_range("IncrementStream: path index out of range");
  return std::span<const double>(path_).subspan(k * dim_, dim_);
}

std::vector<double> IncrementStream::increment(std::size_t k) const {
  if (k >= grid_.n_steps) throw std::out_of_range("IncrementStream: increment index out of range");
  std::vector<double> out(dim_);
  for (std::size_t c = 0; c < dim_; ++c) out[c] = path_[(k + 1) * dim_ + c] - path_[k * dim_ + c];
  return out;
}

std::vector<double> IncrementStream::values() const {
  std::vector<double> out(grid_.n_steps * dim_);
  for (std::size_t k = 0; k < grid_.n_steps; ++k) {
    for (std::size_t c = 0; c < dim_; ++c) {
      out[k * dim_ + c] = path_[(k + 1) * dim_ + c] - path_[k * dim_ + c];
    }
  }
  return out;
}

IncrementStream sample_increments(std::uint64_t seed, std::uint64_t particle_id,
                                  const TimeGrid& grid, std::size_t dim) {
  const TimeGrid checked = TimeGrid::make(grid.h, grid.n_steps);
  BrownianCursor cursor(seed, particle_id, checked.h, dim);
  std::vector<double> path((checked.n_steps + 1) * dim, 0.0);
  std::vector<double> dw(dim);
  for (std::size_t k = 0; k < checked.n_steps; ++k) {
    cursor.advance(dw);
    const auto w = cursor.position();
    std::copy(w.begin(), w.end(), path.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
  }
  return IncrementStream(seed, particle_id, checked, dim, std::move(path));
}

IncrementStream coarsen(const IncrementStream& stream, std::size_t factor) {
  if (factor < 1) throw std::invalid_argument("coarsen: factor must be >= 1");
  const std::size_t n = stream.grid().n_steps;
  if (n % factor != 0) {
    throw std::invalid_argument("coarsen: factor " + std::to_string(factor) +
                                " does not divide n_steps = " + std::to_string(n));
  }
  const std::size_t coarse_n = n / factor;
  const std::size_t d = stream.dim();
  const TimeGrid grid = TimeGrid::make(stream.grid().h * static_cast<double>(factor), coarse_n);
  std::vector<double> path((coarse_n + 1) * d);
  for (std::size_t k = 0; k <= coarse_n; ++k) {
    const auto w = stream.path_at(k * factor);
    std::copy(w.begin(), w.end(), path.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  return IncrementStream(stream.seed(), stream.particle_id(), grid, d, std::move(path));
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw std::runtime_error("read_stream_binary: truncated input");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

constexpr char kMagic[4] = {'M', 'V', 'B', 'W'};

}  // namespace

void write_stream_binary(std::ostream& out, const IncrementStream& stream) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.dim()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(stream.grid().n_steps));
  for (double x : stream.values()) put_le<double>(out, x);
}

StreamDump read_stream_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("read_stream_binary: bad magic");
  }
  StreamDump dump;
  dump.dim = get_le<std::uint32_t>(in);
  dump.n_steps = static_cast<std::size_t>(get_le<std::uint64_t>(in));
  dump.increments.resize(dump.dim * dump.n_steps);
  for (double& x : dump.increments) x = get_le<double>(in);
  return dump;
}

}  // namespace mvsim
