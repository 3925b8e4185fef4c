#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mvsim/experiments.hpp"
#include "mvsim/model.hpp"

namespace mvsim {

enum class StudyId {
  StrongConvergence,
  ChaosVsN,
  ErrorVsH,
  InvariantMeasure,
  Contraction,
  MomentBound,
  DensityEvolution,
};

std::string to_string(StudyId id);
std::optional<StudyId> parse_study_id(std::string_view text);

/// Seed used when a config does not set one.
inline constexpr std::uint64_t kDefaultSeed = 20240917;

/// Constants declared for the built-in linear model when [constants] is absent.
AssumptionConstants default_linear_constants();

using StudyParams =
    std::variant<StrongConvergenceParams, ChaosParams, ErrorVsHParams, InvariantMeasureParams,
                 ContractionParams, MomentBoundParams, DensityEvolutionParams>;

/// A fully resolved, schema-checked run description.
struct RunConfig {
  std::string model_id = "linear";
  LinearMeanFieldParams linear;
  AssumptionConstants constants;
  double safety = 0.9;
  StudyId study = StudyId::StrongConvergence;
  StudyParams params;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
  std::string output_dir = "results";
  /// Every resolved key ("section.key", canonical value), defaults included,
  /// in schema order.
  std::vector<std::pair<std::string, std::string>> resolved;

  ModelSpec model() const;
};

/// Parses the sectioned key-value format:
///
///   # comment            (also ';')
///   [section]
///   key = value          lists are comma separated
///
/// Sections: model, constants, study, tolerances, output. Keys are checked
/// against the schema of the selected study; unknown keys, duplicates,
/// malformed values and out-of-range values throw ConfigError naming the key.
RunConfig parse_run_config(std::string_view text);

/// Reads and parses a config file. Missing or unreadable files throw
/// ConfigError with a message distinct from schema errors.
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text of the resolved config without the thread count and the
/// output directory; stable across runs.
std::string canonical_config(const RunConfig& config);

/// 16 hex digits of FNV-1a over canonical_config.
std::string config_hash(const RunConfig& config);

/// Study-level checks that need no simulation: h against h_sharp (warnings)
/// and grid divisibility (errors, thrown as ConfigError).
std::vector<std::string> physics_warnings(const RunConfig& config);

}  // namespace mvsim
