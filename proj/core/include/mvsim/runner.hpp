#pragma once

#include <filesystem>
#include <string>

#include "mvsim/config.hpp"
#include "mvsim/report.hpp"

namespace mvsim {

/// Name of the environment variable that overrides the output root.
inline constexpr const char* kOutputRootEnv = "MVSIM_OUTPUT_ROOT";

std::string code_version();

/// Runs the configured study. Grid and schema problems surface as
/// ConfigError before any simulation starts.
StudyReport run_study(const RunConfig& config);

/// Output root: $MVSIM_OUTPUT_ROOT if set and non-empty, else output.dir.
std::filesystem::path output_root(const RunConfig& config);

/// manifest.json content for a finished run.
std::string manifest_json(const RunConfig& config, const StudyReport& report);

/// Writes report.json, manifest.json and one CSV per table into a fresh
/// <root>/<study>/<UTC timestamp>-<config hash>/ directory and returns it.
std::filesystem::path write_outputs(const RunConfig& config, const StudyReport& report,
                                    const std::filesystem::path& root);

}  // namespace mvsim
