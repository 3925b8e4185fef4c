#pragma once

#include <iosfwd>

namespace mvsim::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kError = 2 };

/// Entry point of the mvsim tool. Verbs: run, validate, list-presets.
/// run:      0 all verdicts pass, 1 any verdict fails or is inconclusive,
///           2 config or runtime error.
/// validate: 0 clean, 1 warnings, 2 errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvsim::cli
