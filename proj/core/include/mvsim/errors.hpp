#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drift or diffusion produced (or was handed) a non-finite value.
class ModelEvaluationError : public Error {
 public:
  using Error::Error;
};

/// A particle state became non-finite during an EM step.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t particle, std::size_t step, const std::string& what)
      : Error(what), particle_(particle), step_(step) {}

  std::size_t particle() const noexcept { return particle_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t particle_;
  std::size_t step_;
};

/// The requested scheme needs a law the model cannot supply.
class UnsupportedLawError : public Error {
 public:
  using Error::Error;
};

/// Malformed or schema-violating run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvsim
